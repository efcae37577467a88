use std::path::Path;
use std::process::Command;

use trajseg::cli;
use trajseg::config::RunConfig;
use trajseg::ingest::{load_dataset, DATASET_MAGIC};
use trajseg::tensor::CKPT_MAGIC;

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    for kv in [
        "synth.trips=60",
        "model.base_channels=4",
        "train.max_epochs=2",
        "train.patience=2",
        "train.batch_size=16",
    ] {
        cfg.set_pair(kv).unwrap();
    }
    cfg
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trajseg"))
}

#[test]
fn synth_train_eval_infer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let data = dir.path().join("d.jsonl");
    let ckpt = dir.path().join("m.ckpt");
    assert_eq!(cli::cmd_synth(&cfg, &data).unwrap(), 60);
    let text = std::fs::read_to_string(&data).unwrap();
    assert_eq!(text.lines().next(), Some(DATASET_MAGIC));
    assert_eq!(load_dataset(&data).unwrap().len(), 60);

    let s = cli::cmd_train(&data, &cfg, &ckpt, None, |_| {}).unwrap();
    assert_eq!(s.epochs, 2);
    assert!(std::fs::read(&ckpt).unwrap().starts_with(CKPT_MAGIC));
    assert_eq!(std::fs::read_to_string(&s.history).unwrap().lines().count(), 2);

    let metrics = dir.path().join("metrics.json");
    let r = cli::cmd_eval(&data, &ckpt, &cfg, Some(&metrics)).unwrap();
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(json["format"], cli::METRICS_FORMAT);
    assert_eq!(r.report.trips, 12);

    let csv = dir.path().join("pred.csv");
    let rows = cli::cmd_infer(&data, &ckpt, &cfg, &csv).unwrap();
    let out = std::fs::read_to_string(&csv).unwrap();
    assert!(out.starts_with("trip,index,lat,lng,t,mode,p_walk,p_bike,p_bus,p_car,p_train"));
    assert_eq!(out.lines().count(), rows + 1);
}

#[test]
fn binary_runs_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let ckpt = dir.path().join("m.ckpt");
    let set = |c: &mut Command| {
        for kv in ["synth.trips=40", "model.base_channels=2", "train.max_epochs=1", "train.patience=1"] {
            c.args(["--set", kv]);
        }
    };
    let mut c = bin();
    c.args(["synth", "-o"]).arg(&data);
    set(&mut c);
    assert!(c.status().unwrap().success());
    let mut c = bin();
    c.arg("train").arg(&data).arg("-o").arg(&ckpt);
    set(&mut c);
    assert!(c.status().unwrap().success());
    let out = bin().arg("eval").arg(&data).arg("-c").arg(&ckpt).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("A_p"));
}

#[test]
fn mismatched_luni_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["synth", "--luni", "32", "-o"])
        .arg(dir.path().join("x.jsonl"))
        .output()
        .unwrap();
    // synth never builds a model
    assert!(out.status.success());
    let data = dir.path().join("x.jsonl");
    let out = bin()
        .args(["train", "--luni", "32", "-o"])
        .arg(dir.path().join("m.ckpt"))
        .arg(&data)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("product"));
}

#[test]
fn unknown_config_key_is_an_error() {
    let mut cfg = RunConfig::default();
    assert!(cfg.set_pair("model.widht=3").is_err());
    assert!(cfg.apply_text("seed = 3\nbogus = 1\n").is_err());
}

#[test]
fn missing_arguments_exit_with_usage() {
    let out = bin().arg("train").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert!(!Path::new("never-written.ckpt").exists());
}
