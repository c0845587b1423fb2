use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use heatpoint::scenario::Format;
use heatpoint::{parse_scenario, run, RunOptions};

#[derive(Parser)]
#[command(name = "heatpoint", version, about = "Bound states of point interactions on 2D/3D manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tasks of a scenario file.
    Run {
        /// Scenario (TOML).
        scenario: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        threads: Option<usize>,
        /// Run only the heat-kernel property suite.
        #[arg(long)]
        check: bool,
        /// Tabular artifact format; overrides `output.format`.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

// `a/b.toml` → `a/b.calibration.toml`
fn sidecar(scenario: &Path) -> PathBuf {
    let stem = scenario.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    scenario.with_file_name(format!("{stem}.calibration.toml"))
}

fn main() -> ExitCode {
    let Command::Run { scenario, out, threads, check, format } = Cli::parse().command;
    let go = || -> anyhow::Result<i32> {
        let text = std::fs::read_to_string(&scenario).with_context(|| format!("reading {}", scenario.display()))?;
        let sc = parse_scenario(&text).with_context(|| format!("in {}", scenario.display()))?;
        let mut opts = RunOptions::from_scenario(&sc);
        if let Some(o) = out {
            opts.out = o;
        }
        if let Some(f) = format {
            opts.format = f;
        }
        opts.check_only = check;
        opts.cache = Some(sidecar(&scenario));
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            pool = pool.num_threads(n);
        }
        let report = pool.build()?.install(|| run(&sc, &opts))?;
        for t in report.manifest["tasks"].as_array().into_iter().flatten() {
            if t["status"] != "ok" {
                eprintln!("task {} ({}) failed: {}", t["index"], t["kind"].as_str().unwrap_or("?"), t["error"].as_str().unwrap_or("?"));
            }
        }
        Ok(report.exit_code)
    };
    match go() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
