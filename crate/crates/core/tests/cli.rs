use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn monofam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monofam"))
        .args(args)
        .env_remove("MONOFAM_SEED")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const FAMILY: &str = r#"{
    "label": "shrinking",
    "grid": {"t_start": 0.0, "t_end": 1.0, "n": 6},
    "builder": {"kind": "nested_lq", "params": {"q": 2, "mesh": 4,
                "lengths": {"affine": {"at_zero": 1.0, "slope": -0.5}}}}
}"#;

fn section_json() -> String {
    let rows: Vec<String> = (0..6)
        .map(|i| format!("[{}, {}, {}, 0.0]", 0.1 * i as f64, 0.2, 0.3 - 0.01 * i as f64))
        .collect();
    format!(r#"{{"family_ref": "shrinking", "values": [{}]}}"#, rows.join(", "))
}

#[test]
fn empty_suite_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "suite.json", r#"{"properties": []}"#);
    let out = monofam(&["check", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["properties"].as_array().unwrap().len(), 0);
}

#[test]
fn status_mismatch_exits_one_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "suite.json",
        r#"{"output": "out/report.json", "properties": [
            {"name": "counterexample_scalar", "params": {"grids": [16], "mesh": 32}}
        ]}"#,
    );
    let out = monofam(&["check", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["properties"][0]["report"]["status"], "hypothesis_violated");
    assert_eq!(report["properties"][0]["matched"], false);
}

#[test]
fn malformed_config_exits_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "suite.json", "{\n  \"seed\": 1,\n  \"properties\": [\n}");
    let out = monofam(&["check", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn seed_override_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "suite.json", r#"{"seed": 5, "properties": []}"#);
    let out = Command::new(env!("CARGO_BIN_EXE_monofam"))
        .args(["check", s(&cfg)])
        .env("MONOFAM_SEED", "77")
        .output()
        .unwrap();
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["seed"], 77);
    let bad = Command::new(env!("CARGO_BIN_EXE_monofam"))
        .args(["check", s(&cfg)])
        .env("MONOFAM_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn converge_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "study.json",
        r#"{"metric": "ftc_error", "grids": [32, 64, 128], "output": "ftc"}"#,
    );
    let out = monofam(&["converge", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("ftc.csv")).unwrap();
    assert!(csv.starts_with("n,ftc_error\n32,"));
    let study: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ftc.json")).unwrap()).unwrap();
    let order = study["fitted_order"].as_f64().unwrap();
    assert!((order - 1.0).abs() < 0.3, "{order}");
}

#[test]
fn converge_unknown_metric_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "study.json", r#"{"metric": "speed", "grids": [8, 16]}"#);
    let out = monofam(&["converge", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("blowup_ratio") && err.contains("main1_gap"), "{err}");
}

#[test]
fn norm_and_gradient_commands() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write(dir.path(), "family.json", FAMILY);
    let sec = write(dir.path(), "section.json", &section_json());
    let csv = dir.path().join("norms.csv");
    let out = monofam(&["norm", s(&fam), s(&sec), "--p", "2", "--csv", s(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let sob = &v["sobolev_norm"];
    let total = sob["total"].as_f64().unwrap();
    assert!((total - sob["lp_part"].as_f64().unwrap() - sob["gradient_part"].as_f64().unwrap()).abs() < 1e-15);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 7);

    let pairs = dir.path().join("pairs.csv");
    let out = monofam(&["gradient", s(&fam), s(&sec), "--p", "inf", "--oracle", "--pairs-csv", s(&pairs)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let closed = v["gradient"]["lp_norm"].as_f64().unwrap();
    let oracle = v["oracle"]["lp_norm"].as_f64().unwrap();
    assert!((closed - oracle).abs() < 1e-9, "{closed} vs {oracle}");
    assert_eq!(v["verification"]["status"], "pass");
    assert_eq!(fs::read_to_string(&pairs).unwrap().lines().count(), 1 + 15);
}

#[test]
fn section_for_wrong_family_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write(dir.path(), "family.json", FAMILY);
    let sec = write(dir.path(), "section.json", &section_json().replace("shrinking", "other"));
    let out = monofam(&["norm", s(&fam), s(&sec)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn iso_command_reports_constants() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write(
        dir.path(),
        "family.json",
        r#"{"label": "flat", "grid": {"t_start": 0.0, "t_end": 1.0, "n": 32},
            "builder": {"kind": "nested_lq", "params": {"q": 2, "mesh": 4,
                        "lengths": {"affine": {"at_zero": 1.0, "slope": 0.0}}}}}"#,
    );
    let iso = write(dir.path(), "iso.json", r#"{"kind": "weight", "w": "affine"}"#);
    let csv = dir.path().join("pairs.csv");
    let out = monofam(&["iso", s(&fam), s(&iso), "--csv", s(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["M_forward"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(fs::read_to_string(&csv).unwrap().starts_with("s,t,"));
}

#[test]
fn blowup_command_and_coarse_mesh() {
    let out = monofam(&["blowup", "--n", "4,8", "--s", "0.2", "--t", "0.3", "--mesh", "512"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    let out = monofam(&["blowup", "--n", "16,128", "--mesh", "1000"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("4096"));
}
