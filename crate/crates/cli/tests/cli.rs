use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bipk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bipk"))
        .args(args)
        .env_remove("BIPK_SEED")
        .output()
        .expect("spawn bipk")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

#[test]
fn check_accepts_a_valid_model() {
    let o = bipk(&["check", &fixture("reactive.bip")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["errors"], 0);
}

#[test]
fn check_rejects_a_duplicate_port() {
    let o = bipk(&["check", &fixture("duplicate_port.bip")]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("E002"), "{err}");
}

#[test]
fn missing_file_is_a_usage_error() {
    assert_eq!(bipk(&["check", "/nonexistent/model.bip"]).status.code(), Some(2));
}

#[test]
fn generated_model_checks_and_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = tmp(&dir, "a.bip");
    let b = tmp(&dir, "b.bip");
    for out in [&a, &b] {
        let o = bipk(&["gen", &fixture("ndd_mini.genom"), "-o", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.contains("AllowGoToAfterPrereqs"));
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(bipk(&["check", a.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn gen_rejects_an_unknown_incompatibility() {
    let o = bipk(&["gen", &fixture("unknown_incompat.genom")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Park"));
}

#[test]
fn zero_step_run_writes_header_and_footer() {
    let dir = tempfile::tempdir().unwrap();
    let trace = tmp(&dir, "t.jsonl");
    let o = bipk(&["run", &fixture("reactive.bip"), "--steps", "0", "--trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["steps"], 0);
    let lines: Vec<Value> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0]["model_hash"].is_string());
    assert_eq!(lines[1]["status"], "step-limit");
}

#[test]
fn demo_run_reports_deadlock_by_exit_code() {
    let bug = bipk(&["demo", "fig11-bug", "run", "--steps", "10000"]);
    assert_eq!(bug.status.code(), Some(1));
    assert_eq!(json(&bug)["status"], "deadlock");
    let fixed = bipk(&["demo", "fig11-fixed", "run", "--steps", "2000"]);
    assert_eq!(fixed.status.code(), Some(0));
    assert_eq!(json(&fixed)["status"], "step-limit");
}

#[test]
fn explicit_property_is_checked() {
    let o = bipk(&[
        "demo",
        "battery-unsafe",
        "verify",
        "--property",
        "battery.FIDS.totalPwr > battery.init.maxPwr",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["verdict"], "violated");
}

#[test]
fn tiny_bound_is_inconclusive() {
    let o = bipk(&["demo", "fig11-fixed", "verify", "--bound", "10"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unknown_variant_is_a_usage_error() {
    let o = bipk(&["demo", "fig99", "verify"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_from_environment_reproduces_runs() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let trace = tmp(&dir, "t.jsonl");
        let o = Command::new(env!("CARGO_BIN_EXE_bipk"))
            .args(["demo", "fig12-fixed", "run", "--steps", "300", "--trace", trace.to_str().unwrap()])
            .env("BIPK_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        std::fs::read_to_string(trace).unwrap()
    };
    let a = run("17");
    assert_eq!(a, run("17"));
    assert!(a.starts_with('{') && a.contains("\"seed\":17"));
    assert_ne!(a, run("18"));
}

#[test]
fn text_format_is_plain() {
    let o = bipk(&["--format", "text", "demo", "fig12-fixed", "verify"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(serde_json::from_slice::<Value>(&o.stdout).is_err());
    assert!(String::from_utf8_lossy(&o.stdout).contains("deadlock-free"));
}
