use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regtrace")).args(args).current_dir(root()).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn strip_elapsed(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("elapsed");
    v
}

#[test]
fn partie_finie_of_example_symbol() {
    let v = json(&["pf", "--symbol", "examples/inv-sqrt.json"]);
    assert!((v["value"].as_f64().unwrap() - 1.3862944).abs() < 1e-7);
    assert_eq!(v["inputs"]["symbol"]["generator"], "japanese");
    assert!(v["expansion"]["entries"].is_array());
    assert!(v["elapsed"].as_f64().is_some());
}

#[test]
fn heat_trace_of_torus() {
    let v = json(&["heat", "--model", "torus2", "--t", "1e-3"]);
    assert!((v["value"].as_f64().unwrap() - 79.57747).abs() < 1e-5);
}

#[test]
fn connes_on_circle() {
    let v = json(&["connes", "--model", "circle", "--length", "1048576"]);
    assert!((v["values"]["dixmier"].as_f64().unwrap() - 2.0).abs() < 0.01);
    assert!((v["values"]["residue_over_n"].as_f64().unwrap() - 2.0).abs() < 1e-10);
}

#[test]
fn outputs_replay_bit_for_bit() {
    let dir = std::env::temp_dir().join(format!("regtrace-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cases: [&[&str]; 7] = [
        &["pf", "--symbol", "examples/inv-sqrt.json"],
        &["stokes", "--symbol", "examples/inv-sqrt.json", "--axis", "0"],
        &["heat", "--model", "torus:1,2", "--t", "0.05"],
        &["param-tr", "--family", "sqrt", "--mu", "1.5", "--derivative", "3"],
        &["dixmier", "--sequence", "power", "--p", "2", "--length", "4096"],
        &["kv", "--model", "circle", "--s", "0.25"],
        &["cov-check", "--symbol", "examples/inv-sqrt.json", "--matrix", "-3"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let first = json(args);
        let path = dir.join(format!("{i}.json"));
        std::fs::write(&path, serde_json::to_string(&first).unwrap()).unwrap();
        let second = json(&["--config", path.to_str().unwrap()]);
        assert_eq!(strip_elapsed(first), strip_elapsed(second), "{args:?}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn validation_errors_exit_with_two() {
    for args in [
        &["pf", "--symbol", "no-such-file.json"][..],
        &["pf", "--symbol", "examples/inv-sqrt.json", "--bogus"],
        &["kv", "--model", "circle", "--s", "0.5"],
        &["heat", "--model", "sphere"],
        &["cov-check", "--symbol", "examples/inv-sqrt.json", "--matrix", "0"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
    let dir = std::env::temp_dir().join(format!("regtrace-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"generator": "japanese", "dimension": 1}"#).unwrap();
    assert_eq!(run(&["pf", "--symbol", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn csv_series_has_header() {
    let out = run(&["heat", "--model", "circle", "--t", "0.01", "--t-max", "1", "--points", "5", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,heat_trace,expansion");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0.01,"));
    let out = run(&["restrace", "--model", "torus2", "--format", "csv"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("heat,zeta\n"));
}

#[test]
fn corpus_exit_status_follows_criteria() {
    assert_eq!(run(&["corpus", "--only", "1,6"]).status.code(), Some(0));
    let v: Value = serde_json::from_slice(&run(&["corpus", "--only", "1,6"]).stdout).unwrap();
    assert_eq!(v["values"]["passed"], 2);
    assert_eq!(run(&["corpus", "--only", "7"]).status.code(), Some(1));
}

#[test]
fn thom_check_and_thread_cap() {
    let out = Command::new(env!("CARGO_BIN_EXE_regtrace"))
        .args(["thom-check", "--samples", "10"])
        .env("REGTRACE_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["values"]["max_homotopy_defect"].as_f64().unwrap() < 1e-8);
    let bad =
        Command::new(env!("CARGO_BIN_EXE_regtrace")).arg("thom-check").env("REGTRACE_THREADS", "x").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
