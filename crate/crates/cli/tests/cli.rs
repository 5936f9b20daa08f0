use std::path::Path;
use std::process::{Command, Output};

use wpcn_cli::output::{EDA_HEADER, RESULTS_HEADER};

fn wpcn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpcn"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn emitted_preset_reproduces_preset_results() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(wpcn(&["preset", "pt-sweep", "--out", "pt-sweep.toml"], d)
        .status
        .success());
    assert!(
        wpcn(&["analyze", "--config", "pt-sweep.toml", "--out", "a.csv"], d)
            .status
            .success()
    );
    assert!(wpcn(&["analyze", "--preset", "pt-sweep", "--out", "b.csv"], d)
        .status
        .success());
    let a = read(d, "a.csv");
    assert_eq!(a, read(d, "b.csv"));
    assert_eq!(a.lines().next(), Some(RESULTS_HEADER));
    // 19 points, analysis and benchmark each.
    assert_eq!(a.lines().count(), 1 + 2 * 19);
}

#[test]
fn simulate_writes_results_and_eda() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = wpcn(
        &[
            "simulate",
            "--preset",
            "small",
            "--slots",
            "5000",
            "--burn-in",
            "0",
            "--out",
            "s.csv",
        ],
        d,
    );
    assert!(out.status.success());
    let results = read(d, "s.csv");
    let mut lines = results.lines();
    assert_eq!(lines.next(), Some(RESULTS_HEADER));
    assert!(lines
        .next()
        .unwrap()
        .starts_with("small,simulation,2,0.3,4,"));
    let eda = read(d, "s.eda.csv");
    assert_eq!(eda.lines().next(), Some(EDA_HEADER));
    assert_eq!(eda.lines().count(), 1 + 2 * 5);
}

#[test]
fn compare_writes_relative_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = wpcn(
        &[
            "compare", "--preset", "small", "--slots", "20000", "--out", "c.csv",
        ],
        d,
    );
    assert!(out.status.success());
    let sources: Vec<String> = read(d, "c.csv")
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(sources, ["analysis", "simulation", "oracle"]);
    assert_eq!(read(d, "c.errors.csv").lines().count(), 3);
}

#[test]
fn oracle_refuses_reference_population() {
    let dir = tempfile::tempdir().unwrap();
    let out = wpcn(
        &["oracle", "--preset", "table1", "--out", "o.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("limit"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.toml"), "experiment = \"x\"\ncapacity = -3\n").unwrap();
    let out = wpcn(&["analyze", "--config", "bad.toml"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    assert_eq!(
        wpcn(&["analyze", "--config", "missing.toml"], d)
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        wpcn(&["analyze", "--preset", "nope"], d).status.code(),
        Some(2)
    );
    assert_eq!(
        wpcn(&["simulate", "--preset", "small", "--slots", "0"], d)
            .status
            .code(),
        Some(2)
    );
}
