//! Golden scenarios: each `tests/golden/<name>.toml` is run and compared with the
//! values in `<name>.expected.json`, which `tests/golden/oracle.py` derives from
//! closed-form resolvents.

use std::fs;
use std::path::{Path, PathBuf};

use heatpoint::{parse_scenario, run, RunOptions};
use serde_json::Value;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn csv_table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn check_number(what: &str, got: f64, c: &Value) -> Result<(), String> {
    let want = c["value"].as_f64().unwrap();
    let tol = c["abs"].as_f64().unwrap().max(c["rel"].as_f64().unwrap() * want.abs());
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want} ± {tol:e}"))
    }
}

fn run_check(out: &Path, c: &Value) -> Result<(), String> {
    let file = c["file"].as_str().unwrap();
    let path = out.join(file);
    if let Some(ptr) = c["pointer"].as_str() {
        let doc: Value = serde_json::from_str(&fs::read_to_string(&path).map_err(|e| format!("{file}: {e}"))?).unwrap();
        let got = doc.pointer(ptr).ok_or_else(|| format!("{file}{ptr}: missing"))?;
        let what = format!("{file}{ptr}");
        return match c.get("equals") {
            Some(want) if want == got => Ok(()),
            Some(want) => Err(format!("{what}: got {got}, want {want}")),
            None => check_number(&what, got.as_f64().ok_or_else(|| format!("{what}: not a number"))?, c),
        };
    }
    let (header, rows) = csv_table(&path);
    if let Some(n) = c.get("rows") {
        let n = n.as_u64().unwrap() as usize;
        return if rows.len() == n { Ok(()) } else { Err(format!("{file}: {} rows, want {n}", rows.len())) };
    }
    let col = c["column"].as_str().unwrap();
    let j = header.iter().position(|h| h == col).ok_or_else(|| format!("{file}: no column {col}"))?;
    if let Some(bound) = c.get("at_most") {
        let bound = bound.as_f64().unwrap();
        for (i, r) in rows.iter().enumerate() {
            let v: f64 = r[j].parse().unwrap();
            if !(v <= bound) {
                return Err(format!("{file}[{i}].{col} = {v} exceeds {bound:e}"));
            }
        }
        return Ok(());
    }
    let i = c["row"].as_u64().unwrap() as usize;
    let cell = rows.get(i).ok_or_else(|| format!("{file}: no row {i}"))?[j].clone();
    let what = format!("{file}[{i}].{col}");
    match c.get("equals") {
        Some(want) if want.as_str() == Some(cell.as_str()) => Ok(()),
        Some(want) => Err(format!("{what}: got {cell}, want {want}")),
        None => check_number(&what, cell.parse().map_err(|_| format!("{what}: {cell} is not a number"))?, c),
    }
}

#[test]
fn golden_scenarios_match_oracle() {
    let mut names: Vec<String> = fs::read_dir(golden_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "toml").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    assert!(names.len() >= 8, "{names:?}");
    let mut failures = Vec::new();
    for name in &names {
        let dir = golden_dir();
        let sc = parse_scenario(&fs::read_to_string(dir.join(format!("{name}.toml"))).unwrap()).unwrap();
        let expected: Value =
            serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}.expected.json"))).unwrap()).unwrap();
        let out = tempfile::tempdir().unwrap();
        let opts = RunOptions { out: out.path().to_path_buf(), ..RunOptions::from_scenario(&sc) };
        let report = run(&sc, &opts).unwrap();
        if report.exit_code != expected["exit_code"].as_i64().unwrap() as i32 {
            failures.push(format!("{name}: exit code {} ({})", report.exit_code, report.manifest["tasks"]));
            continue;
        }
        let checks = expected["checks"].as_array().unwrap();
        for c in checks {
            if let Err(e) = run_check(out.path(), c) {
                failures.push(format!("{name}: {e}"));
            }
        }
        println!("{name}: {} checks", checks.len());
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
