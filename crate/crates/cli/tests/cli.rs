use std::path::PathBuf;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_burkholder");

fn config(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("burkholder-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

const SMALL: &str = "family = matrix\nd1 = 4\nd2 = 3\nn = 20\n";

#[test]
fn run_writes_one_row_per_round() {
    let cfg = config("run.cfg", SMALL);
    let out = run(&["run", "--config", cfg.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("round,"));
    assert_eq!(lines.count(), 21);
}

#[test]
fn run_is_reproducible() {
    let cfg = config("repro.cfg", SMALL);
    let a = run(&["run", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    let b = run(&["run", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_file_matches_stdout() {
    let cfg = config("out.cfg", SMALL);
    let dest = cfg.with_file_name("report.csv");
    let to_file = run(&["run", "--config", cfg.to_str().unwrap(), "--seed", "2", "--out", dest.to_str().unwrap()]);
    assert_eq!(to_file.status.code(), Some(0));
    let piped = run(&["run", "--config", cfg.to_str().unwrap(), "--seed", "2"]);
    assert_eq!(std::fs::read(&dest).unwrap(), piped.stdout);
}

#[test]
fn small_c_is_a_usage_error() {
    let cfg = config("c0.cfg", &format!("{SMALL}c = 0\n"));
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c ≥ r·log(d1+d2)"));
}

#[test]
fn unknown_key_and_suite_are_usage_errors() {
    let cfg = config("bad.cfg", "family = matrix\nwidth = 3\n");
    assert_eq!(run(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let cfg = config("ok.cfg", SMALL);
    assert_eq!(run(&["verify", "--suite", "bogus", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_suites_pass() {
    let cfg = config("verify.cfg", SMALL);
    let out = run(&["verify", "--suite", "p1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["verify", "--suite", "khintchine", "--trials", "100", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn halved_c_fails_p1_with_witness() {
    // ln 7 / 2 ≈ 0.973
    let cfg = config("halved.cfg", &format!("{SMALL}c = 0.973\nunchecked = true\n"));
    let out = run(&["verify", "--suite", "p1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL") && text.contains("witness["), "{text}");
}

#[test]
fn compare_writes_one_column_per_strategy() {
    let cfg = config("compare.cfg", SMALL);
    let out = run(&[
        "compare", "--config", cfg.to_str().unwrap(), "--strategies", "linearized,randomized", "--trials", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "round,linearized_regret,randomized_regret");
    assert_eq!(text.lines().count(), 22);

    let out = run(&["compare", "--config", cfg.to_str().unwrap(), "--strategies", "linearized"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "round,linearized_regret");
}
