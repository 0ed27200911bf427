use std::path::Path;
use std::process::{Command, Output};

use inclusion_core::setcalc::GridSet;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inclusion"))
        .args(args)
        .env("INCLUSION_OUT_DIR", dir)
        .output()
        .unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["check-lyapunov", "rld"]), 0);
    assert_eq!(code(d, &["check-lyapunov", "expanding"]), 1);
    assert_eq!(code(d, &["check-lyapunov", "rld", "--variant", "bogus"]), 2);
    assert_eq!(code(d, &["simulate", "rld"]), 2);
    assert_eq!(code(d, &["simulate", "no-such-system", "--x0", "1"]), 2);
    assert_eq!(code(d, &["simulate", "rld", "--x0", "1,2"]), 2);
    assert_eq!(code(d, &["simulate", "rld", "--x0", "0.5", "-p", "analysis"]), 2);
    assert_eq!(code(d, &["frobnicate"]), 2);
}

#[test]
fn simulate_writes_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["simulate", "rld", "--x0", "0.5", "--T", "1", "-p", "R=2"]), 0);
    let csv = std::fs::read_to_string(d.join("rld-simulate-trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with('t'));
    assert!(lines.count() > 10);
    let manifest = json(&d.join("rld-simulate-manifest.json"));
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["overrides"][0], "R=2");
    let sha = manifest["config_sha256"].as_str().unwrap();
    assert!(sha.len() == 64 && sha.bytes().all(|b| b.is_ascii_hexdigit()));
    for out in manifest["outputs"].as_array().unwrap() {
        assert!(Path::new(out.as_str().unwrap()).exists());
    }
}

#[test]
fn reports_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["omega", "damped-oscillator", "--x0", "1,0", "--T", "20", "--burn", "10", "--jobs", "2"];
    assert_eq!(code(a.path(), &args), 0);
    assert_eq!(code(b.path(), &args), 0);
    for name in ["damped-oscillator-omega-omega.json", "damped-oscillator-omega-omega-points.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn locate_report_states_its_subject() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["locate", "rld", "--theorem", "thm31"]), 0);
    let report = json(&d.join("rld-locate-thm31-report.json"));
    assert_eq!(report["outcome"], "pass");
    assert_eq!(report["subject"], "numerical omega-limit estimate");
    assert_eq!(report["assumption_a1"], "declared");
    assert!(report["max_violation"].as_f64().unwrap() <= report["tolerance"].as_f64().unwrap());
}

#[test]
fn exported_sets_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["sets", "rld", "--set", "band", "--alpha", "0.02", "--beta", "0.08"]), 0);
    let text = std::fs::read_to_string(d.join("rld-sets-band.gridset")).unwrap();
    let g = GridSet::from_text(&text).unwrap();
    assert!(g.count() > 0);
    let centers = std::fs::read_to_string(d.join("rld-sets-band-centers.csv")).unwrap();
    assert_eq!(centers.lines().count(), g.count() + 1);
}

#[test]
fn catalog_lists_builtins_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["catalog", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for expected in ["rld", "gradient-flow", "double-well", "rotation", "saddle", "expanding"] {
        assert!(names.contains(&expected), "{expected}");
    }
}
