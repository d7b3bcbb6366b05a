//! End-to-end runs of the `stable-tanaka` binary.

use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stable-tanaka"))
        .args(args)
        .env("STABLE_TANAKA_OUT", out)
        .output()
        .expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "m.json", r#"{"kind": "martingale-zero-mean", "seed": 4}"#);
    let out = cli(
        &["run", &spec, "--override", "settings.paths=200", "--override", "sim.n_steps=256", "--override", "sim.eps=0.01"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 12);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("martingale-zero-mean.json")).unwrap()).unwrap();
    assert_eq!(report["inputs"]["seed"], 4);
    assert!(dir.path().join("martingale-zero-mean.timing.json").exists());
}

#[test]
fn failing_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "e.json", r#"{"kind": "existence-scan", "seed": 0}"#);
    let out = cli(&["run", &spec, "--out", dir.path().join("x").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS existence-diverges[alpha=0.9]"), "{stdout}");
    assert!(dir.path().join("x/existence-scan.json").exists());
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(cli(&["run", missing.to_str().unwrap()], dir.path()).status.code(), Some(2));
    let spec = write_spec(dir.path(), "bad.json", r#"{"kind": "density-report", "seed": 1, "colour": 3}"#);
    assert_eq!(cli(&["run", &spec], dir.path()).status.code(), Some(2));
    let out = cli(&["density", "--alpha", "2.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn density_bundle_and_localtime_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["density", "--alpha", "1.7", "--beta", "-0.4", "--points", "4096", "--half-width", "30"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let bundle = dir.path().join("density-report");
    assert!(bundle.join("summary.json").exists());
    let csv = std::fs::read_dir(&bundle).unwrap().filter_map(|e| e.ok()).find(|e| e.path().extension().is_some_and(|x| x == "csv"));
    assert!(csv.is_some());

    let out = cli(&["localtime", "--n-steps", "512", "--eps", "0.01", "--levels", "9", "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("localtime-seed3.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.iter().all(|v| v.is_finite())));
    // the path starts at 0, so the occupation estimate there is positive
    assert!(rows[4][2] > 0.0);
}
