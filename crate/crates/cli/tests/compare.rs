//! The compare subcommand over finished run directories.

use std::path::PathBuf;
use std::process::Command;

use hetqfl_cli::compare::{compare, CURVES_CSV, DELTAS_CSV};
use hetqfl_cli::{run, ExperimentConfig};

fn config(rounds: usize) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
algorithms = ["qfl_fedavg"]
seeds = [1]
[dataset]
kind = "blobs"
n = 120
num_classes = 2
dim = 4
[federation]
num_clients = 2
qubits = 2
layers = 1
[training]
rounds = {rounds}
local_steps = 1
batch_size = 8
learning_rate = 0.1
"#
    ))
    .unwrap()
}

#[test]
fn self_comparison_has_zero_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&config(2), &a, true).unwrap();
    run(&config(2), &b, true).unwrap();
    let c = compare(&[a, b]).unwrap();
    assert!(!c.truncated);
    assert_eq!(c.rounds, 2);
    assert!(c.deltas.iter().all(|d| d.delta_acc_pp == 0.0 && d.delta_loss == 0.0));
    let out = dir.path().join("cmp");
    c.write(&out).unwrap();
    assert!(out.join(CURVES_CSV).is_file() && out.join(DELTAS_CSV).is_file());
}

#[test]
fn differing_lengths_are_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("long"), dir.path().join("short"));
    run(&config(3), &a, true).unwrap();
    run(&config(1), &b, true).unwrap();
    let c = compare(&[a, b]).unwrap();
    assert!(c.truncated);
    assert_eq!(c.rounds, 1);
    assert!(c.series.iter().all(|s| s.acc.len() == 1));
}

#[test]
fn missing_directory_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    run(&config(1), &a, true).unwrap();
    let missing: PathBuf = dir.path().join("nope");
    assert!(compare(&[a.clone(), missing.clone()]).is_err());

    let out = dir.path().join("cmp");
    let result = Command::new(env!("CARGO_BIN_EXE_hetqfl"))
        .arg("compare")
        .arg(&a)
        .arg(&missing)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    assert!(result.stdout.is_empty());
    assert!(String::from_utf8_lossy(&result.stderr).contains("nope"));
    assert!(!out.exists());
}
