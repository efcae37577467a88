//! Generate a labeled synthetic dataset and summarise it.
//!
//! `cargo run --release --example synth_dataset -- [n_trips] [out.jsonl]`

use trajseg::ingest::{save_dataset, Mode};
use trajseg::synth::{generate_trips, SynthConfig};

fn main() -> trajseg::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(200);
    let cfg = SynthConfig::default();
    let trips = generate_trips(&cfg, n)?;

    let mut points = [0usize; Mode::COUNT];
    let mut speed = [0.0; Mode::COUNT];
    let mut cps = [0usize; 3];
    for t in &trips {
        cps[t.cp_indices.len().min(2)] += 1;
        for (f, m) in t.features.iter().zip(&t.labels) {
            points[m.index()] += 1;
            speed[m.index()] += f[0];
        }
    }
    println!("{n} trips; 0/1/2 change points: {cps:?}");
    for m in Mode::ALL {
        let i = m.index();
        println!("{:<6} {:>7} points  mean speed {:>6.2} m/s", m.name(), points[i], speed[i] / points[i].max(1) as f64);
    }
    if let Some(out) = args.get(1) {
        save_dataset(&trips, out.as_ref())?;
        println!("wrote {out}");
    }
    Ok(())
}
