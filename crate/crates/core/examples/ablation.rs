//! One-knob-at-a-time sweep over a small synthetic dataset.
//!
//! `cargo run --release --example ablation -- "n_cp=1,2,3;l_uni=8,16,32"`

use trajseg::cli::{cmd_ablate, cmd_synth, render_ablation};
use trajseg::config::RunConfig;

fn main() -> anyhow::Result<()> {
    let sweep = std::env::args().nth(1).unwrap_or_else(|| "l_uni=8,16,32;k_s=1,3".into());
    let mut cfg = RunConfig::default();
    for kv in ["synth.trips=300", "model.base_channels=8", "train.max_epochs=8", "train.patience=8"] {
        cfg.set_pair(kv)?;
    }
    let dir = tempfile::tempdir()?;
    let data = dir.path().join("synth.jsonl");
    cmd_synth(&cfg, &data)?;
    let rows = cmd_ablate(&data, &cfg, &sweep, |r| eprintln!("{} = {}: A_p {:.3}", r.knob, r.value, r.accuracy))?;
    print!("{}", render_ablation(&rows));
    Ok(())
}
