use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bundled_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.json")
}

fn workbench(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_workbench"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("WORKBENCH_THREADS", "2")
        .output()
        .unwrap()
}

#[test]
fn zero_depth_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"L": 0}"#).unwrap();
    for cmd in ["check", "sweep", "report"] {
        let out = workbench(&[cmd], &cfg, dir.path());
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    }
}

#[test]
fn malformed_json_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\"n\": ").unwrap();
    assert_eq!(workbench(&["check"], &cfg, dir.path()).status.code(), Some(2));
}

#[test]
fn missing_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = workbench(
        &["report", "--seeds", "1"],
        &bundled_config(),
        &dir.path().join("absent"),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn only_runs_one_group() {
    let dir = tempfile::tempdir().unwrap();
    let out = workbench(
        &["check", "--only", "carleson", "--seeds", "10"],
        &bundled_config(),
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("check_summary.json")).unwrap();
    let checks: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert!(!checks.is_empty());
    assert!(checks
        .iter()
        .all(|c| c["check_name"].as_str().unwrap().starts_with("carleson.")));
}

#[test]
fn one_seed_gives_one_row_per_report_type() {
    let dir = tempfile::tempdir().unwrap();
    let out = workbench(&["report", "--seeds", "1"], &bundled_config(), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    let kinds: Vec<&str> = rows.iter().map(|r| r.split(',').nth(1).unwrap()).collect();
    assert_eq!(kinds, ["strong", "weak", "testing_easy", "testing_bound"]);
    let width = csv.lines().next().unwrap().split(',').count();
    assert!(rows.iter().all(|r| r.split(',').count() == width));
}

#[test]
fn sweep_failure_names_the_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.json");
    fs::write(&cfg, r#"{"sweep": {"tolerance": 0.001}}"#).unwrap();
    let out = workbench(&["sweep"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failing slope: sweep.apbar"));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("eps,apbar,ainf_sigma1,ainf_sigma2,ainf_v,norm_f1,norm_f2,r1_lower")
    );
    assert_eq!(lines.filter(|l| !l.starts_with('#')).count(), 8);
    assert!(!csv.contains('\r'));
}

#[test]
fn bad_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_workbench"))
        .args(["sweep", "--out"])
        .arg(dir.path())
        .env("WORKBENCH_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
