use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mpstomo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpstomo")).current_dir(dir).args(args).output().expect("binary runs")
}

fn last_json(out: &Output) -> Value {
    let stdout = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(stdout.lines().last().expect("a summary line")).expect("stdout ends with JSON")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = mpstomo(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    last_json(&out)
}

#[test]
fn unknown_subcommand_prints_usage_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = mpstomo(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(last_json(&out)["error"]["kind"], "usage");
}

#[test]
fn failures_emit_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = mpstomo(dir.path(), &["simulate", "--state", "missing.json", "--out", "d.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(last_json(&out)["error"]["kind"], "io");

    std::fs::write(dir.path().join("bad.json"), r#"{"format": "mpstomo.dataset", "version": 1}"#).unwrap();
    let out = mpstomo(dir.path(), &["noise", "--data", "bad.json", "--sigma", "0.1", "--out", "n.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(last_json(&out)["error"]["kind"], "schema");
}

#[test]
fn dense_limit_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-state", "--kind", "w", "-n", "6", "--out", "w.json"]);
    let out = Command::new(env!("CARGO_BIN_EXE_mpstomo"))
        .current_dir(dir.path())
        .env("MPSTOMO_DENSE_LIMIT", "8")
        .args(["simulate", "--state", "w.json", "--window-size", "4", "--out", "d.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(last_json(&out)["error"]["kind"], "resource_limit");
    ok(dir.path(), &["simulate", "--state", "w.json", "--window-size", "4", "--out", "d.json"]);
}

#[test]
fn cluster_pipeline_certifies_the_reconstruction() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-state", "--kind", "cluster", "-n", "8", "--out", "cluster.json"]);
    ok(d, &["simulate", "--state", "cluster.json", "--window-size", "3", "--out", "w3.json"]);
    ok(d, &["simulate", "--state", "cluster.json", "--window-size", "4", "--out", "w4.json"]);
    let svt = ok(
        d,
        &["reconstruct-svt", "--data", "w3.json", "--bond-dim", "2", "--iters", "300", "--reference", "cluster.json", "--out", "svt.json"],
    );
    assert!(svt["best_fidelity"].as_f64().unwrap() > 0.99);
    let cert = ok(d, &["certify", "--estimate", "svt.json", "--data", "w4.json", "--k", "2", "--out", "cert.json"]);
    assert_eq!(cert["vacuous"], false);
    assert!(cert["fidelity_bound"].as_f64().unwrap() >= 0.99);

    let file: Value = serde_json::from_str(&std::fs::read_to_string(d.join("cert.json")).unwrap()).unwrap();
    assert_eq!(file["format"], "mpstomo.certificate");
    assert_eq!(file["terms"].as_array().unwrap().len(), file["window_starts"].as_array().unwrap().len());

    // projectors on 4 sites cannot be read off 3-site windows
    let out = mpstomo(d, &["certify", "--estimate", "svt.json", "--data", "w3.json", "--k", "2", "--out", "c.json"]);
    assert_eq!(last_json(&out)["error"]["kind"], "insufficient_support");
}

#[test]
fn disentangling_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-state", "--kind", "random", "-n", "6", "--bond-dim", "2", "--seed", "5", "--out", "psi.json"]);
    let s = ok(d, &["reconstruct-disentangle", "--state", "psi.json", "--out", "circ.json", "--mps-out", "back.json"]);
    assert_eq!(s["kappa"], 2);
    assert!(s["error_bound"].as_f64().unwrap() < 1e-6);
    ok(d, &["simulate", "--state", "back.json", "--window-size", "2", "--out", "data.json"]);
    let noisy = ok(d, &["noise", "--data", "data.json", "--sigma", "0.01", "--seed", "1", "--out", "noisy.json"]);
    assert!(noisy["max_epsilon"].as_f64().unwrap() > 0.0);
}

#[test]
fn experiment_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("f.json"),
        r#"{"experiment": "wstate", "n_values": [4], "iterations": 40, "sigmas": [0.0, 0.01], "trials": 2, "output_dir": "out"}"#,
    )
    .unwrap();
    let s = ok(d, &["experiment", "wstate", "--config", "f.json"]);
    assert_eq!(s["rows"], 3);
    let csv = std::fs::read_to_string(d.join("out/wstate.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n_sites,sigma,trial,seed,fidelity,infidelity,best_iteration,best_merit,status"
    );
    assert_eq!(lines.count(), 3);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(d.join("out/wstate_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["groups"].as_array().unwrap().len(), 2);

    let out = mpstomo(d, &["experiment", "random", "--config", "f.json"]);
    assert_eq!(last_json(&out)["error"]["kind"], "config");
}
