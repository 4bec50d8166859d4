//! End-to-end checks of the command line binary: every subcommand is driven
//! through a real process, and the classify/table pair is exercised both cold
//! and against a warm cache.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apn-atlas"))
        .args(args)
        .output()
        .expect("binary launches")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn field_reports_the_arithmetic() {
    let out = run(&["field", "--n", "6"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("GF(2^6)"), "{text}");
    assert!(text.contains("0x43"), "default modulus shown: {text}");
    assert!(text.contains("GF(2^2), GF(2^3)"), "subfields listed: {text}");
}

#[test]
fn field_rejects_an_invalid_modulus() {
    let out = run(&["field", "--n", "6", "--modulus", "0x44"]);
    assert!(!out.status.success());
    assert!(!stderr(&out).is_empty());
}

#[test]
fn analyze_emits_invariants_as_json() {
    let out = run(&["analyze", "--n", "6", "--f", "x^3", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid json");
    assert_eq!(v["n"], 6);
    assert_eq!(v["apn"], true);
    assert_eq!(v["almost_bent"], false, "even dimension is never almost bent");
    assert_eq!(v["degree"], 2);
    assert_eq!(v["diff_spectrum"]["0"], serde_json::json!(2016));
    assert_eq!(v["diff_spectrum"]["2"], serde_json::json!(2016));
    assert_eq!(v["extended_walsh"]["16"], serde_json::json!(336));
}

#[test]
fn analyze_enforces_the_apn_gate() {
    let ok = run(&["analyze", "--n", "6", "--f", "x^3", "--require-apn"]);
    assert!(ok.status.success());
    let bad = run(&["analyze", "--n", "6", "--f", "x^5", "--require-apn"]);
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("not APN"), "{}", stderr(&bad));
}

#[test]
fn analyze_rejects_malformed_expressions() {
    let out = run(&["analyze", "--n", "6", "--f", "x^^3"]);
    assert!(!out.status.success());
}

#[test]
fn enumerate_reports_the_funnel() {
    let out = run(&["enumerate", "--n", "6", "--family", "f3", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid json");
    assert_eq!(v["stats"]["candidates"], 378);
    assert_eq!(v["stats"]["condition_passed"], 336);
    assert_eq!(v["stats"]["apn_passed"], 336);
    assert_eq!(v["stats"]["emitted"], 336);
    assert!(v["instances"].as_array().map_or(0, |a| a.len()) > 0);
}

#[test]
fn compare_decides_power_functions_instantly() {
    let out = run(&["compare", "--n", "6", "--f", "x^3", "--g", "x^24", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("Equivalent"), "{}", stdout(&out));
}

#[test]
fn compare_separates_distinct_classes() {
    let out = run(&["compare", "--n", "6", "--f", "x^3", "--g", "x^6 + x^9 + a^7*x^48"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("inequivalent"), "{}", stdout(&out));
}

#[test]
fn classify_writes_a_table_that_rerenders_and_caches() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out_dir = dir.path().to_str().unwrap();

    let cold = run(&["classify", "--n", "6", "--out", out_dir]);
    assert!(cold.status.success(), "{}", stderr(&cold));
    let table_path = dir.path().join("table-n6.json");
    let cold_table = read_table(&table_path);
    assert_eq!(cold_table["class_count"], 3);
    assert_eq!(cold_table["records"].as_array().unwrap().len(), 3);
    assert_eq!(cold_table["undecided_pairs"].as_array().unwrap().len(), 0);
    assert!(dir.path().join("cache-n6.jsonl").exists(), "cache file written");

    // A warm rerun must reproduce the identical table from the cache.
    let warm = run(&["classify", "--n", "6", "--out", out_dir]);
    assert!(warm.status.success(), "{}", stderr(&warm));
    assert_eq!(read_table(&table_path), cold_table, "warm run reproduces the table");

    let rendered = run(&["table", "--input", table_path.to_str().unwrap(), "--format", "csv"]);
    assert!(rendered.status.success(), "{}", stderr(&rendered));
    let csv = stdout(&rendered);
    assert!(csv.contains("6.1"), "{csv}");
    assert!(csv.contains("x^3"), "{csv}");

    let md = run(&["table", "--input", table_path.to_str().unwrap(), "--format", "markdown"]);
    assert!(md.status.success());
    assert!(stdout(&md).contains("| 6.1 |"), "{}", stdout(&md));
}

fn read_table(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).expect("table file readable");
    serde_json::from_str(&text).expect("table file is valid json")
}

#[test]
fn table_rejects_a_missing_input() {
    let out = run(&["table", "--input", "/nonexistent/table.json"]);
    assert!(!out.status.success());
}
