use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qxg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qxg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = qxg(args);
    assert!(
        out.status.success(),
        "qxg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn traces(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".jsonl"))
        .collect();
    v.sort();
    v
}

#[test]
fn gen_writes_traces_and_manifest_reproducibly() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(&["gen", "--scenes", "4", "--seed", "5", "--out", p(dir)]);
    }
    let files = traces(&a);
    assert_eq!(files.len(), 4);
    assert_eq!(files, traces(&b));
    for f in files.iter().chain(std::iter::once(&"manifest.json".to_string())) {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest: Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenes"].as_array().unwrap().len(), 4);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = qxg(&["gen", "--scenes", "0", "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(qxg(&["bench", "--objects", "1"]).status.code(), Some(2));
    assert_eq!(qxg(&["gen", "--kind", "nope", "--out", p(tmp.path())]).status.code(), Some(2));
    assert_eq!(qxg(&["inspect"]).status.code(), Some(2));
}

#[test]
fn build_exports_json_and_dot() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["gen", "--scenes", "1", "--kind", "stopping-for-crosser", "--distractors", "3", "--out", p(tmp.path())]);
    let trace = tmp.path().join(&traces(tmp.path())[0]);
    let graph = tmp.path().join("g.json");
    let out = ok(&["build", "--trace", p(&trace), "--out", p(&graph), "-v"]);
    let stats: Vec<Value> = String::from_utf8_lossy(&out.stderr)
        .lines()
        .filter_map(|l| serde_json::from_str(l).ok())
        .collect();
    assert!(!stats.is_empty());
    for s in &stats {
        let k = s["objects_in_frame"].as_u64().unwrap();
        assert_eq!(s["pairs_updated"].as_u64().unwrap(), k * (k - 1) / 2);
    }

    let summary: Value = serde_json::from_slice(&ok(&["inspect", "--graph", p(&graph)]).stdout).unwrap();
    assert_eq!(summary["nodes"], 5);
    assert_eq!(summary["edges"], 10);

    let dot = String::from_utf8(ok(&["build", "--trace", p(&trace), "--format", "dot"]).stdout).unwrap();
    assert!(dot.starts_with("graph "));
    assert_eq!(dot.matches(" -- ").count(), 10);
}

#[test]
fn missing_trace_is_a_runtime_error() {
    let out = qxg(&["build", "--trace", "/nonexistent/x.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn train_explain_eval_round() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(&["gen", "--scenes", "24", "--seed", "3", "--out", p(&data)]);
    let model = tmp.path().join("m.json");
    let out = ok(&[
        "train", "--traces", p(&data), "--split", "all", "--trees", "10", "--out", p(&model),
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 3, "{stdout}");

    let again = tmp.path().join("m2.json");
    ok(&[
        "train", "--traces", p(&data), "--split", "all", "--trees", "10", "--out", p(&again),
    ]);
    assert_eq!(fs::read(&model).unwrap(), fs::read(&again).unwrap());

    let info: Value = serde_json::from_slice(&ok(&["inspect", "--model", p(&model)]).stdout).unwrap();
    assert_eq!(info["feature_len"], 220);
    assert_eq!(info["actions"].as_object().unwrap().len(), 3);

    let trace = data.join(&traces(&data)[0]);
    let ranked: Value = serde_json::from_slice(
        &ok(&["explain", "--trace", p(&trace), "--model", p(&model), "--threshold", "0"]).stdout,
    )
    .unwrap();
    assert!(!ranked.as_array().unwrap().is_empty());

    let none = ok(&["explain", "--trace", p(&trace), "--model", p(&model), "--threshold", "1.01"]);
    let empty: Value = serde_json::from_slice(&none.stdout).unwrap();
    assert_eq!(empty, Value::Array(vec![]));

    let missing = qxg(&["explain", "--trace", p(&trace), "--model", p(&model), "--actor", "ghost"]);
    assert_eq!(missing.status.code(), Some(1));

    let report: Value = serde_json::from_slice(
        &ok(&["eval", "--traces", p(&data), "--model", p(&model), "--split", "all", "--json"]).stdout,
    )
    .unwrap();
    assert_eq!(report["metrics"]["actions"].as_object().unwrap().len(), 3);
    let all_in: Value = serde_json::from_slice(
        &ok(&[
            "eval", "--traces", p(&data), "--model", p(&model), "--split", "all", "--json",
            "--threshold", "0",
        ])
        .stdout,
    )
    .unwrap();
    for (_, m) in all_in["metrics"]["actions"].as_object().unwrap() {
        assert_eq!(m["recall"], 1.0);
    }
}

#[test]
fn single_action_corpus_warns() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["gen", "--scenes", "6", "--kind", "stopping-for-crosser", "--out", p(tmp.path())]);
    let model = tmp.path().join("m.json");
    let out = ok(&[
        "train", "--traces", p(tmp.path()), "--split", "all", "--trees", "3", "--out", p(&model),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn config_file_overrides_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"t": 3, "hyperparams": {"n_trees": 4}}"#).unwrap();
    ok(&["gen", "--scenes", "8", "--out", p(tmp.path())]);
    let model = tmp.path().join("m.json");
    ok(&[
        "train", "--traces", p(tmp.path()), "--split", "all", "--config", p(&cfg), "--out",
        p(&model),
    ]);
    let info: Value = serde_json::from_slice(&ok(&["inspect", "--model", p(&model)]).stdout).unwrap();
    assert_eq!(info["t"], 3);
    assert_eq!(info["feature_len"], 132);
    for (_, f) in info["actions"].as_object().unwrap() {
        assert_eq!(f["trees"], 4);
    }

    fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let bad = qxg(&["train", "--traces", p(tmp.path()), "--config", p(&cfg), "--out", p(&model)]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn bench_two_objects_one_pair() {
    let out: Value = serde_json::from_slice(
        &ok(&["bench", "--objects", "2", "--frames", "3", "--repeats", "1"]).stdout,
    )
    .unwrap();
    assert_eq!(out["bench"]["pairs_per_frame"], 1);
    assert!(out["scaling"].is_null());
}
