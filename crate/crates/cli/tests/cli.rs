use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lieproc"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Small config around one h2 model and one grid.
fn config_with(model: Value, experiments: Value) -> Value {
    json!({
        "groups": { "h2": { "kind": "heisenberg", "N": 2, "p": 2.0 } },
        "models": { "m": model },
        "grids": { "g": { "t_end": 1.0, "cells": 64 } },
        "experiments": experiments,
    })
}

fn write_config(dir: &Path, v: &Value) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn brownian() -> Value {
    json!({ "kind": "product", "group": "h2", "driver": { "diffusion": 0.3 } })
}

#[test]
fn catalog_listing() {
    let out = bin().arg("list-experiments").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("cocycle") && text.contains("tail_decay"));

    let out = bin().args(["list-experiments", "--json"]).output().unwrap();
    let all: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(all.len() >= 15);
    assert!(all.iter().all(|e| e["verifies"].as_str().is_some_and(|s| !s.is_empty())));

    let out = bin().args(["list-experiments", "--json", "--module", "jump-analysis"]).output().unwrap();
    let sub: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!sub.is_empty() && sub.len() < all.len());
    assert!(sub.iter().all(|e| e["module"] == "jump-analysis"));
}

#[test]
fn zero_driver_battery_is_trivial() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&configs().join("zero_driver.json"), dir.path(), &["--strict"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["status"], "pass");
    let cocycle = read_json(&dir.path().join("zero_cocycle.json"));
    assert_eq!(cocycle["result"]["max_defect"], 0.0);
    let moment = read_json(&dir.path().join("zero_exp_moment.json"));
    assert_eq!(moment["result"]["estimate"]["mean"], 1.0);
    let expectation = read_json(&dir.path().join("zero_expectation_bound.json"));
    assert_eq!(expectation["result"]["mean_count"], 0.0);
}

#[test]
fn corrupted_cell_fails_and_names_triple() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(
        brownian(),
        json!([{ "name": "faulty", "seed": 3, "check": { "cocycle": {
            "model": "m", "grid": "g", "samples": 200,
            "fault": { "cell": 40, "offset": [0.0, 0.0, 0.0, 0.0, 1e-3] }
        }}}]),
    );
    let out = run(&write_config(dir.path(), &cfg), &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let report = read_json(&dir.path().join("out/faulty.json"));
    assert_eq!(report["status"], "fail");
    let triple: Vec<u64> = serde_json::from_value(report["result"]["argmax_triple"].clone()).unwrap();
    assert!(triple.contains(&40) && triple.contains(&41), "{triple:?}");
    assert!(report["warnings"][0].as_str().unwrap().contains("triple"));
}

#[test]
fn schema_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(
        &p,
        r#"{
  "groups": { "h2": { "kind": "heisenberg", "N": 2 } },
  "experiments": [
    { "name": "k", "seed": 1, "check": { "kernel_suite": { "groups": ["h2"], "cases": 10, "colour": 1 } } }
  ]
}"#,
    )
    .unwrap();
    let out = run(&p, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("experiments[0].check.kernel_suite"), "{err}");
    assert!(err.contains(":4:"), "line number missing: {err}");
    assert!(err.contains("colour"), "{err}");

    // missing seed
    fs::write(
        &p,
        r#"{ "experiments": [ { "name": "k", "check": { "kernel_suite": { "groups": [], "cases": 1 } } } ] }"#,
    )
    .unwrap();
    let out = run(&p, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("seed"));
}

#[test]
fn unresolved_references_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(
        brownian(),
        json!([{ "name": "x", "seed": 1, "check": { "largest_step": {
            "model": "nope", "grid": "g", "delta": 0.5, "trials": 10 } } }]),
    );
    let out = run(&write_config(dir.path(), &cfg), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("experiments[0].check.largest_step.model") && err.contains("nope"), "{err}");

    let out = run(&dir.path().join("missing.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));

    // a model whose driver is invalid is a config error too
    let bad = json!({ "kind": "product", "group": "h2", "driver": { "diffusion": -1.0 } });
    let out = run(&write_config(dir.path(), &config_with(bad, json!([]))), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("models.m.driver"));
}

#[test]
fn runtime_errors_exit_3_naming_the_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(
        brownian(),
        json!([
            { "name": "fine", "seed": 1, "check": { "bounded_jumps": { "model": "m", "delta": 0.5, "power": 1 } } },
            { "name": "too_few_trials", "seed": 1, "check": { "exp_moment": {
                "model": "m", "grid": "g", "alpha": 0.5, "delta": 0.5, "jump_power": 1, "trials": 5 } } }
        ]),
    );
    let out = run(&write_config(dir.path(), &cfg), &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("too_few_trials"));
    let report = read_json(&dir.path().join("out/too_few_trials.json"));
    assert_eq!(report["status"], "error");
    assert!(report["error"].as_str().unwrap().contains("trials"));
    assert_eq!(read_json(&dir.path().join("out/fine.json"))["status"], "pass");
}

#[test]
fn inconclusive_only_fails_under_strict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(
        brownian(),
        json!([{ "name": "no_jumps", "seed": 1, "check": { "detector_fidelity": {
            "model": "m", "grid": "g", "epsilon": 5.0, "trials": 5 } } }]),
    );
    let path = write_config(dir.path(), &cfg);
    let out = run(&path, &dir.path().join("a"), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("warning"));
    assert_eq!(read_json(&dir.path().join("a/no_jumps.json"))["status"], "inconclusive");
    let out = run(&path, &dir.path().join("b"), &["--strict"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reports_are_versioned_and_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(
        json!({ "kind": "product", "group": "h2", "driver": {
            "diffusion": 0.2, "jumps": { "intensity": 2.0, "law": { "kind": "uniform_on_ball", "radius": 0.4 } } } }),
        json!([
            { "name": "lemma", "seed": 4, "check": { "maximum_oscillation": { "model": "m", "grid": "g", "delta": 0.5, "trials": 300 } } },
            { "name": "tail", "seed": 5, "check": { "tail_decay": {
                "model": "m", "grid": "g", "alpha": 0.5, "delta": 0.5, "jump_power": 1, "trials": 200 } } },
            { "name": "path", "seed": 6, "check": { "sample_path": { "model": "m", "grid": "g" } } }
        ]),
    );
    let path = write_config(dir.path(), &cfg);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&path, &a, &["--jobs", "1"]);
    run(&path, &b, &["--jobs", "3"]);
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 6, "{names:?}");
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n:?} differs");
    }
    let r = read_json(&a.join("lemma.json"));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["params"]["trials"], 300);
    assert!(fs::read_to_string(a.join("tail.tail.csv")).unwrap().starts_with("k,gamma,exceedance,se\n"));
    assert!(fs::read_to_string(a.join("path.path.csv")).unwrap().starts_with("t,g0"));
}

#[test]
fn shipped_configs_parse_and_resolve() {
    for name in ["default.json", "acceptance.json", "zero_driver.json"] {
        let cfg = lieproc::load_config(&configs().join(name)).unwrap();
        lieproc::resolve::Context::build(&cfg).unwrap();
        assert!(!cfg.experiments.is_empty());
    }
    let cfg = lieproc::load_config(&configs().join("default.json")).unwrap();
    let kinds: std::collections::BTreeSet<_> = cfg.experiments.iter().map(|e| e.check.kind()).collect();
    assert_eq!(kinds.len(), lieproc::catalog::CATALOG.len(), "default battery covers every kind");
}
