use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sieve-verifier"));
    c.env_remove("SIEVE_VERIFIER_SPECS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const QUICK: [&str; 4] = ["--samples", "20000", "--blocks", "16"];

#[test]
fn verify_buchstab_passes() {
    let o = run(&["verify-buchstab"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{text}");
}

#[test]
fn eval_region_prints_membership() {
    let o = run(&["eval-region", "J3", "0.50", "0.25", "0.05"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "true\n");
    let o = run(&["eval-region", "U_M1", "0.3", "0.2", "0.1", "0.05", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["member"], Value::Bool(false));
}

#[test]
fn estimate_reports_target() {
    let o = run(&["estimate", "LOSS_S42", "--samples", "100000", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for key in ["mean", "std_error", "paper", "0.7226"] {
        assert!(text.contains(key), "{key} missing from {text}");
    }
}

#[test]
fn verify_loss_json_schema() {
    let mut args = vec!["verify-loss", "--profile", "fast", "--seed", "42", "--format", "json"];
    args.extend(QUICK);
    let o = run(&args);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["components"].as_array().unwrap();
    assert_eq!(rows.len(), 22);
    for row in rows {
        for key in ["name", "group", "sign", "paper_value", "mean", "std_error", "n_samples", "seed", "verdict"] {
            assert!(!row[key].is_null(), "{key} missing");
        }
    }
    assert!(v["totals"]["margin"].is_number());
    assert_eq!(v["totals"]["grand_total_paper"], 0.994669);
    assert!(v["schema_version"].is_string());
    let expect = if v["verdict"] == "fail" { 1 } else { 0 };
    assert_eq!(o.status.code(), Some(expect));
}

#[test]
fn thread_count_does_not_change_output() {
    let mut a = vec!["verify-loss", "--format", "json", "--threads", "1"];
    a.extend(QUICK);
    let mut b = vec!["verify-loss", "--format", "json", "--threads", "3"];
    b.extend(QUICK);
    assert_eq!(run(&a).stdout, run(&b).stdout);
}

#[test]
fn csv_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let mut args = vec!["verify-loss", "--format", "csv", "--out", out.to_str().unwrap()];
    args.extend(QUICK);
    let o = run(&args);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 22 + 4 + 1);
    assert!(text.lines().next().unwrap().starts_with("kind,name,group,sign"));
}

#[test]
fn specs_from_environment() {
    let specs = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/specs"));
    let o = bin()
        .args(["estimate", "LOSS_M1"])
        .args(QUICK)
        .env("SIEVE_VERIFIER_SPECS", specs)
        .output()
        .unwrap();
    assert_ne!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let empty = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["estimate", "LOSS_M1"])
        .env("SIEVE_VERIFIER_SPECS", empty.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spec_file_path_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("square.spec");
    std::fs::write(&path, "integral SQUARE group S42 sign + paper 1\n var t1 in [0, 1]\n var t2 in [0, 1]\n measure 1\nend\n").unwrap();
    let o = run(&["estimate", path.to_str().unwrap(), "--samples", "10000", "--blocks", "16", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mean"], 1.0);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["estimate", "LOSS_NOPE"]).status.code(), Some(2));
    assert_eq!(run(&["verify-loss", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(run(&["verify-loss", "--threads", "0"]).status.code(), Some(2));
    assert_eq!(run(&["oracle", "LOSS_M1", "--samples", "20000"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn oracle_agrees_on_s42() {
    let o = run(&["oracle", "LOSS_S42", "--points", "1000", "--samples", "400000", "--blocks", "64"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("agree"));
}

#[test]
fn sensitivity_lists_three_variants() {
    let mut args = vec!["sensitivity", "--format", "json"];
    args.extend(QUICK);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["variants"].as_array().unwrap().len(), 3);
    assert_eq!(v["variants"][1]["rows"].as_array().unwrap().len(), 1);
}
