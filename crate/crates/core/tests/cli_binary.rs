use std::process::{Command, Output};

use serde_json::Value;

const JOB: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/job.json");

fn focklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_focklab"))
        .args(args)
        .env("FOCKLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

#[test]
fn classify_reports_every_operator() {
    let out = focklab(&["classify", JOB]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["operators"]["compact"]["kind"], "Compact");
    assert_eq!(v["operators"]["broken"]["kind"], "Unbounded");
    assert_eq!(v["operators"]["weighted"]["kind"], "Undecided");
}

#[test]
fn compare_and_certify_separated_pair() {
    let v = json(&focklab(&["compare", JOB, "left", "right"]));
    assert_eq!(v["same_component"], false);
    assert!(v["certificate"]["value"].as_f64().unwrap() >= 0.499);
    let v = json(&focklab(&["certify", JOB, "weighted", "compact"]));
    assert_eq!(v["certificate"]["type"], "closedness");
}

#[test]
fn unbounded_input_exits_with_two() {
    let out = focklab(&["path", JOB, "half", "broken"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unbounded"));
}

#[test]
fn schema_error_exits_with_one_and_names_the_path() {
    let dir = std::env::temp_dir().join(format!("focklab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"n": 1, "p": 2, "q": 2, "operators": {"x": {"A": [[[1, 0]]], "b": [[0]]}}}"#).unwrap();
    let out = focklab(&["classify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("operators.x.b"));
    let missing = focklab(&["classify", dir.join("missing.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn path_writes_json_lines_to_out() {
    let dir = std::env::temp_dir().join(format!("focklab-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let target = dir.join("path.jsonl");
    let out = focklab(&["path", JOB, "compact", "compact", "--grid", "4", "--out", target.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&target).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0]["M"], 0.0);
    assert_eq!(lines[5]["verify"]["passed"], true);
}

#[test]
fn selftest_passes() {
    let out = focklab(&["selftest", "--seed", "3"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn shipped_schema_matches_job_fields() {
    let schema: Value =
        serde_json::from_str(include_str!("../../../schema/jobspec.schema.json")).unwrap();
    let props = schema["properties"].as_object().unwrap();
    for key in ["n", "p", "q", "seed", "tol", "budget", "grid", "assume_bounded", "operators", "functions"] {
        assert!(props.contains_key(key), "{key}");
    }
}
