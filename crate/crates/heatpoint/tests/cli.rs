use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heatpoint"))
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.toml"))
}

fn run_in(dir: &Path, scenario: &Path, out: &str, extra: &[&str]) -> (i32, String) {
    let o = bin()
        .current_dir(dir)
        .args(["run", scenario.to_str().unwrap(), "--out", out])
        .args(extra)
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn output_is_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = golden("hyperbolic3_pair");
    assert_eq!(run_in(tmp.path(), &sc, "one", &["--threads", "1"]).0, 0);
    assert_eq!(run_in(tmp.path(), &sc, "four", &["--threads", "4"]).0, 0);
    assert_eq!(run_in(tmp.path(), &sc, "again", &["--threads", "4"]).0, 0);
    let one = files(&tmp.path().join("one"));
    assert!(one.len() >= 5);
    assert_eq!(one, files(&tmp.path().join("four")));
    assert_eq!(one, files(&tmp.path().join("again")));
    for (name, bytes) in &one {
        assert!(!bytes.contains(&b'\r'), "{name}");
    }
}

#[test]
fn failed_task_keeps_other_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = tmp.path().join("s.toml");
    fs::write(
        &sc,
        "[manifold]\nkind = \"flat\"\ndim = 2\n[[centers]]\nat = [0.0, 0.0]\nmu = 1.0\n\
         [[tasks]]\nkind = \"spectrum\"\n[[tasks]]\nkind = \"wavefield\"\nstate = 3\n",
    )
    .unwrap();
    let (code, err) = run_in(tmp.path(), &sc, "o", &[]);
    assert_eq!(code, 2);
    assert!(err.contains("no bound state 3"), "{err}");
    let out = tmp.path().join("o");
    assert_eq!(fs::read_to_string(out.join("spectrum.csv")).unwrap().lines().nth(1).unwrap().split(',').nth(2), Some("-1.0"));
    assert!(!out.join("wavefield.csv").exists());
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["tasks"][0]["status"], "ok");
    assert_eq!(m["tasks"][1]["status"], "failed");
}

#[test]
fn check_runs_only_the_property_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = run_in(tmp.path(), &golden("flat3_asymmetric_pair"), "o", &["--check"]);
    assert_eq!(code, 0);
    let names: Vec<String> = files(&tmp.path().join("o")).into_iter().map(|f| f.0).collect();
    assert_eq!(names, ["manifest.json", "properties.json"]);
    let p: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("o/properties.json")).unwrap()).unwrap();
    assert!(p.as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn json_format_mirrors_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = golden("flat2_rgflow");
    assert_eq!(run_in(tmp.path(), &sc, "c", &[]).0, 0);
    assert_eq!(run_in(tmp.path(), &sc, "j", &["--format", "json"]).0, 0);
    let csv = fs::read_to_string(tmp.path().join("c/rgflow.csv")).unwrap();
    let json: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("j/rgflow.json")).unwrap()).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), csv.lines().count() - 1);
    // gamma = e row: coupling π, β = -π/2
    let row = &rows[3];
    assert_eq!(row["gamma"], std::f64::consts::E);
    assert!((row["coupling"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-9);
    assert!((row["beta"].as_f64().unwrap() + std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    // the landau-pole row has no coupling
    assert_eq!(rows[0]["status"], "landau-pole");
    assert_eq!(rows[0]["coupling"], Value::Null);
}

#[test]
fn validation_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = tmp.path().join("bad.toml");
    fs::write(&sc, "[manifold]\nkind = \"sphere\"\nradius = 1.0\n[[centers]]\nat = [4.0, 0.0]\nmu = 1.0\n[[tasks]]\nkind = \"spectrum\"\n").unwrap();
    let (code, err) = run_in(tmp.path(), &sc, "o", &[]);
    assert_eq!(code, 1);
    assert!(err.contains("centers[0].at: θ ∉ [0, π]"), "{err}");
    assert!(!tmp.path().join("o").exists());
    let (code, err) = run_in(tmp.path(), &tmp.path().join("missing.toml"), "o", &[]);
    assert_eq!(code, 1);
    assert!(err.contains("missing.toml"), "{err}");
}

#[test]
fn calibration_is_cached_beside_the_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = tmp.path().join("s2.toml");
    fs::write(
        &sc,
        "[manifold]\nkind = \"sphere\"\nradius = 1.0\n[[centers]]\nat = [1.0, 0.5]\nmu = 1.0\n[[tasks]]\nkind = \"bounds\"\n",
    )
    .unwrap();
    assert_eq!(run_in(tmp.path(), &sc, "a", &[]).0, 0);
    let cache = tmp.path().join("s2.calibration.toml");
    assert!(fs::read_to_string(&cache).unwrap().contains("[constants.\"sphere:r=1\"]"));
    assert_eq!(run_in(tmp.path(), &sc, "b", &[]).0, 0);
    let bounds = |d: &str| -> Value {
        serde_json::from_str(&fs::read_to_string(tmp.path().join(d).join("bounds.json")).unwrap()).unwrap()
    };
    let (a, b) = (bounds("a"), bounds("b"));
    assert_eq!(a["constants"]["source"], "calibrated");
    assert_eq!(b["constants"]["source"], "cached");
    assert_eq!(a["analytic"], b["analytic"]);
}
