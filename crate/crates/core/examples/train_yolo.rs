//! Train TrajYOLO (CNN or MLP backbone) on synthetic trips.
//!
//! `cargo run --release --example train_yolo -- [cnn|mlp] [n_trips] [max_epochs]`

use trajseg::eval::evaluate_model;
use trajseg::models::{Model, ModelSpec};
use trajseg::synth::{generate_dataset, SynthConfig};
use trajseg::train::{train_with, TrainConfig};

fn main() -> trajseg::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let num = |i: usize, d: usize| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let spec = match args.first().map(String::as_str) {
        Some("mlp") => ModelSpec::traj_yolo_mlp(),
        _ => ModelSpec::traj_yolo().with_base_channels(16),
    };
    let data = generate_dataset(&SynthConfig::default(), num(1, 600))?;
    let model = Model::new(spec, 0)?;
    println!("{:?}/{:?}  output width {}  params {}", model.spec.framework, model.spec.backbone, model.spec.yolo_width(), model.param_count());
    let cfg = TrainConfig {
        max_epochs: num(2, 15),
        ..TrainConfig::default()
    };
    let out = train_with(model, &data, &cfg, |r| {
        println!("epoch {:>2}  train {:.4}  val {:.4}  val A_p {:.3}", r.epoch, r.train_loss, r.val_loss, r.val_ap)
    })?;

    let trip = &data.test[0];
    let pred = out.model.predict(&trip.features)?;
    println!("first test trip: true CPs {:?}, predicted {:?}", trip.cp_indices, pred.cp_indices);
    print!("{}", evaluate_model(&out.model, &data.test)?.to_table());
    Ok(())
}
