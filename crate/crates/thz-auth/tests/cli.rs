//! End-to-end checks of the command-line interface: output files, flag
//! overrides, determinism across processes, and exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thz-auth"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_small_roc_config(dir: &Path) -> PathBuf {
    let table = dir.join("k.csv");
    std::fs::write(&table, "frequency_hz,k_per_m\n5.0e11,0.1\n1.5e12,0.1\n").unwrap();
    let cfg = dir.join("roc.json");
    std::fs::write(
        &cfg,
        r#"{
            "scenario": {
                "alice_count": 4,
                "eve_count": 4,
                "absorption": { "table": "k.csv" }
            },
            "seed": 31,
            "realizations": 50,
            "slots": 200,
            "snr_db": [10.0],
            "pfa_grid": [0.1, 0.3, 0.6]
        }"#,
    )
    .unwrap();
    cfg
}

#[test]
fn pathloss_writes_expected_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pathloss.csv");
    let status = bin()
        .args(["pathloss", "--config"])
        .arg(configs().join("pathloss.json"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("frequency_hz,distance_m,spreading_db,absorption_db,path_loss_db\n"));
    // 5 frequencies x 8 distances plus the header.
    assert_eq!(text.lines().count(), 41);
}

#[test]
fn identical_seeds_give_byte_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_roc_config(dir.path());
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["roc", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "reruns must be byte-identical");
    assert!(!a.is_empty());
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_roc_config(dir.path());
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for (out, seed) in [(&out1, "31"), (&out2, "32")] {
        let status = bin()
            .args(["roc", "--config"])
            .arg(&cfg)
            .args(["--seed", seed, "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_ne!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
}

#[test]
fn pfa_override_controls_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_roc_config(dir.path());
    let out = dir.path().join("o.csv");
    let status = bin()
        .args(["roc", "--config"])
        .arg(&cfg)
        .args(["--pfa", "0.25,0.5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\n0.25,"));
    assert!(text.contains("\n0.5,"));
    assert!(!text.contains("\n0.1,"));
}

#[test]
fn config_error_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let output = bin().args(["roc", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!output.stderr.is_empty());
}

#[test]
fn invalid_parameter_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_roc_config(dir.path());
    let output = bin()
        .args(["roc", "--config"])
        .arg(&cfg)
        .args(["--pfa", "1.5"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_file_exits_with_3() {
    let output = bin()
        .args(["roc", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn out_of_coverage_carrier_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("narrow.csv");
    std::fs::write(&table, "frequency_hz,k_per_m\n2.0e12,0.1\n3.0e12,0.1\n").unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{
            "scenario": {
                "alice_count": 2,
                "eve_count": 0,
                "frequency_hz": 1.0e12,
                "absorption": { "table": "narrow.csv" }
            },
            "seed": 1,
            "snr_db": [10.0]
        }"#,
    )
    .unwrap();
    let output = bin()
        .args(["error-vs-snr", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
}

#[test]
fn txid_writes_gmm_models_json() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("k.csv");
    std::fs::write(&table, "frequency_hz,k_per_m\n5.0e11,20.0\n1.5e12,20.0\n").unwrap();
    let cfg = dir.path().join("txid.json");
    std::fs::write(
        &cfg,
        r#"{
            "scenario": {
                "alice_count": 3,
                "eve_count": 0,
                "absorption": { "table": "k.csv" }
            },
            "seed": 8,
            "realizations": 2,
            "sigma2_grid": [1.0],
            "train_size": 300,
            "test_size": 500
        }"#,
    )
    .unwrap();
    let out = dir.path().join("t.csv");
    let models = dir.path().join("models.json");
    let status = bin()
        .args(["txid", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--gmm-out")
        .arg(&models)
        .status()
        .unwrap();
    assert!(status.success());
    let json = std::fs::read_to_string(&models).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    let records = parsed.as_array().unwrap();
    // 1 sweep point x 2 realizations x 2 cases.
    assert_eq!(records.len(), 4);
    assert!(records[0]["fit"]["model"]["weights"].is_array());
    assert!(records[0]["fit"]["final_log_likelihood"].is_number());
}
