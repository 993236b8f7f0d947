// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

use std::process::Command;
use vibron::io::{read_dataset, RunManifest};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vibron-lab"));
    for (k, _) in std::env::vars() {
        if k.starts_with("VIBRONLAB_") {
            c.env_remove(k);
        }
    }
    c
}

#[test]
fn run_writes_datasets_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "tqd", "--set", "params.n_times=11", "--seed", "7", "--threads", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = RunManifest::from_json(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.input["seed"], 7);
    assert_eq!(m.input["params"]["n_times"], 11);
    let traj = read_dataset(&dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.rows.len(), 11);
    let json = read_dataset(&dir.path().join("trajectory.json")).unwrap();
    assert_eq!(json, traj);
}

#[test]
fn env_overrides_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["run", "fano_sweep"]).env("VIBRONLAB_OUT", dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("fano.csv").exists());
}

#[test]
fn schema_errors_report_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "tqd", "--set", "params.chain.trap.axial_freq_hz=-1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("params.chain.trap.axial_freq_hz"), "{err}");
}

#[test]
fn mismatched_preset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["run", "tqd", "--preset", "switch", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"scenario\": \"tqd\",\n  oops\n}\n").unwrap();
    let out = bin().args(["run", "tqd", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn presets_and_cool() {
    let out = bin().arg("presets").output().unwrap();
    let list = String::from_utf8_lossy(&out.stdout);
    assert!(list.lines().any(|l| l == "tqw_dephasing"));
    let out = bin().args(["cool", "--detuning", "-0.6", "--rabi", "1"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("gamma/2pi = 86."), "{text}");
}
