use std::path::Path;
use std::process::{Command, Output};

use mixfree::report::Report;

fn mixfree(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixfree"))
        .args(args)
        .env("MIF_OUTPUT_DIR", dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn complexity_prints_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = mixfree(&["complexity", "xaXA"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("1"));
    let r = Report::read(&dir.path().join("complexity.json")).unwrap();
    assert_eq!(r.result["value"], 1);
    assert_eq!(r.result["witness"], "b");
    assert!(r.duration_ms.is_some());
}

#[test]
fn growth_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = mixfree(&["growth", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("M(1) = 1  witness word x"), "{}", stdout(&o));
}

#[test]
fn failed_certificate_is_a_success() {
    let dir = tempfile::tempdir().unwrap();
    let o = mixfree(&["certify", "e", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("verdict fail"));
    let o = mixfree(&["certify", "(ab)^6", "1"], dir.path());
    assert!(stdout(&o).starts_with("verdict pass"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // domain error: a symbol outside the alphabet
    assert_eq!(mixfree(&["complexity", "xq"], dir.path()).status.code(), Some(1));
    // budget error
    assert_eq!(
        mixfree(&["growth", "3", "--budget", "50"], dir.path()).status.code(),
        Some(2)
    );
    // usage errors print the grammar
    let o = mixfree(&["complexity"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Grammar:"));
    assert_eq!(mixfree(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(mixfree(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "seed = 11\ntrials = 40\nlambda_hat = 0.45\nc1_hat = 1\n").unwrap();
    let cfg_s = cfg.to_string_lossy().to_string();
    let o = mixfree(
        &[
            "--config",
            &cfg_s,
            "--seed",
            "12",
            "--no-timing",
            "walk",
            "--length",
            "50",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = Report::read(&dir.path().join("walk.json")).unwrap();
    assert_eq!(r.config.master_seed, 12);
    assert_eq!(r.config.trials, Some(40));
    assert_eq!(r.duration_ms, None);
    assert_eq!(r.result["speed"]["speeds"].as_array().unwrap().len(), 40);
}

#[test]
fn plot_checks_report_kind() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(mixfree(&["growth", "2"], d).status.code(), Some(0));
    let report = d.join("growth.json").to_string_lossy().to_string();
    let csv = d.join("growth.csv").to_string_lossy().to_string();
    assert_eq!(mixfree(&["plot", &report, "growth", &csv], d).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), "n,M_n\n1,1\n2,1\n");
    let o = mixfree(&["plot", &report, "tail", &csv], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kind mismatch"));
}

#[test]
fn inadmissible_measure_needs_override() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--measure", "a:1/2, b:1/2", "--trials", "10", "walk", "--length", "20"];
    assert_eq!(mixfree(&args, dir.path()).status.code(), Some(1));
    let mut with = vec!["--allow-inadmissible"];
    with.extend(args);
    assert_eq!(mixfree(&with, dir.path()).status.code(), Some(0));
}

#[test]
fn calibration_is_cached() {
    let dir = tempfile::tempdir().unwrap();
    let first = mixfree(&["--seed", "3", "calibrate"], dir.path());
    assert_eq!(first.status.code(), Some(0));
    assert!(!stdout(&first).contains("(cached)"));
    let second = mixfree(&["--seed", "3", "calibrate"], dir.path());
    assert!(stdout(&second).contains("(cached)"));
    assert!(dir.path().join("calibration-cache.json").exists());
}
