//! Train TrajSSD on synthetic trips and report test-split metrics.
//!
//! `cargo run --release --example train_ssd -- [n_trips] [max_epochs] [base_channels] [ckpt]`

use trajseg::eval::evaluate_model;
use trajseg::models::{Model, ModelSpec};
use trajseg::synth::{generate_dataset, SynthConfig};
use trajseg::train::{train_with, TrainConfig};

fn arg(i: usize, default: usize) -> usize {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> trajseg::Result<()> {
    let data = generate_dataset(&SynthConfig::default(), arg(1, 600))?;
    let spec = ModelSpec::traj_ssd().with_base_channels(arg(3, 16));
    let model = Model::new(spec, 0)?;
    println!("l_uni {}  rows {}  params {}", model.l_uni(), model.spec.ssd_rows(), model.param_count());
    let cfg = TrainConfig {
        max_epochs: arg(2, 15),
        ..TrainConfig::default()
    };
    let out = train_with(model, &data, &cfg, |r| {
        println!("epoch {:>2}  lr {:.0e}  train {:.4}  val {:.4}  val A_p {:.3}", r.epoch, r.lr, r.train_loss, r.val_loss, r.val_ap)
    })?;
    println!("best epoch {}", out.best_epoch);
    print!("{}", evaluate_model(&out.model, &data.test)?.to_table());
    if let Some(p) = std::env::args().nth(4) {
        out.model.save(p.as_ref())?;
    }
    Ok(())
}
