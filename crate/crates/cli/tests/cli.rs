use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ensemble-pac"))
        .args(args)
        .output()
        .unwrap()
}

fn write_manifest(dir: &Path, name: &str, v: Value) -> String {
    let path = dir.join(name);
    fs::write(&path, v.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn generate(dir: &Path) {
    let m = write_manifest(
        dir,
        "gen.json",
        json!({"seed": 3, "output": "gen.jsonl", "run": {"command": "generate", "out_dir": "bundle",
               "instance": {"kind": "random", "num_states": 4, "num_actions": 2, "horizon": 3, "num_models": 2, "dim": 2}}}),
    );
    let out = run(&["gen-instance", "--manifest", &m]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("bundle/target.json").exists());
    assert!(dir.join("gen.jsonl").exists());
}

fn pac(max_iterations: usize) -> Value {
    json!({"seed": 1, "run": {"command": "pac", "target": "bundle/target.json", "ensemble": "bundle/ensemble.json",
           "features": "bundle/features.json", "w_star": "bundle/w_star.json", "epsilon": 0.1, "delta": 0.1,
           "n": 1000, "n_eval": 1000, "max_iterations": max_iterations, "oracle_samples": 40, "grid_resolution": 6}})
}

#[test]
fn pac_run_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let m = write_manifest(dir.path(), "pac.json", pac(40));
    let out_path = dir.path().join("pac.jsonl");
    let out = run(&[
        "run-pac",
        "--manifest",
        &m,
        "--out",
        out_path.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).unwrap();
    let summary: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(summary["type"], "summary");
    assert_eq!(summary["status"], "terminated");

    // Same report with one thread; a different seed changes it.
    let serial = dir.path().join("serial.jsonl");
    run(&[
        "run-pac",
        "--manifest",
        &m,
        "--out",
        serial.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert_eq!(fs::read(&out_path).unwrap(), fs::read(&serial).unwrap());
    let reseeded = dir.path().join("reseeded.jsonl");
    run(&[
        "run-pac",
        "--manifest",
        &m,
        "--out",
        reseeded.to_str().unwrap(),
        "--seed",
        "99",
    ]);
    assert_ne!(fs::read(&out_path).unwrap(), fs::read(&reseeded).unwrap());
}

#[test]
fn stdout_when_no_output_path() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let m = write_manifest(
        dir.path(),
        "diag.json",
        json!({"seed": 0, "run": {"command": "diagnose", "target": "bundle/target.json",
               "ensemble": "bundle/ensemble.json", "features": "bundle/features.json", "grid_resolution": 2}}),
    );
    let out = run(&["diagnose", "--manifest", &m]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 9 + 1);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let m = write_manifest(dir.path(), "pac.json", pac(40));
    // Subcommand does not match the manifest.
    assert_eq!(run(&["run-select", "--manifest", &m]).status.code(), Some(2));
    let bad = write_manifest(dir.path(), "bad.json", json!({"seed": 1, "run": {"command": "pac"}}));
    let out = run(&["run-pac", "--manifest", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json"));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        run(&["run-pac", "--manifest", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn learner_failure_exits_3_with_report() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    // An unreachable v* makes model selection exhaust the family.
    let features: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bundle/features.json")).unwrap()).unwrap();
    fs::write(
        dir.path().join("coarse.json"),
        json!({"kind": "constant", "num_states": 4, "num_actions": 2, "dim": 1}).to_string(),
    )
    .unwrap();
    fs::write(dir.path().join("fine.json"), features.to_string()).unwrap();
    fs::write(
        dir.path().join("family.json"),
        json!({"partitions": ["coarse.json", "fine.json"]}).to_string(),
    )
    .unwrap();
    let m = write_manifest(
        dir.path(),
        "select.json",
        json!({"seed": 2, "output": "select.jsonl", "run": {"command": "select", "target": "bundle/target.json",
               "ensemble": "bundle/ensemble.json", "family": "family.json", "v_star": 1.0, "epsilon": 0.1,
               "delta": 0.1, "n": 500, "n_eval": 500, "oracle_samples": 20, "grid_resolution": 4}}),
    );
    let out = run(&["run-select", "--manifest", &m]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("select.jsonl")).unwrap();
    let summary: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(summary["status"], "exhausted");
    assert_eq!(summary["rounds"], 2);
}
