//! Change points from the uniform time window baseline versus ground truth.
//!
//! `cargo run --release --example utw_baseline -- [n_trips]`

use trajseg::eval::{cp_score, evaluate_utw, utw_baseline};
use trajseg::synth::{generate_trips, SynthConfig};

fn main() -> trajseg::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(300);
    let trips = generate_trips(&SynthConfig::default(), n)?;

    let t = &trips[0];
    let cps = utw_baseline(&t.points, 120.0);
    let at = |idx: &[usize]| idx.iter().map(|&i| t.points[i]).collect::<Vec<_>>();
    println!("trip 0: {} points, true CPs {:?}, UTW(120 s) {:?}", t.len(), t.cp_indices, cps);
    println!("trip 0 score {:?}", cp_score(&at(&t.cp_indices), &at(&cps)));

    println!("{:>8} {:>6} {:>6} {:>9} {:>7}", "window_s", "tp", "fp", "precision", "recall");
    for w in [30.0, 60.0, 120.0, 240.0, 480.0] {
        let s = evaluate_utw(&trips, w);
        println!("{w:>8} {:>6} {:>6} {:>9.3} {:>7.3}", s.tp, s.fp, s.precision, s.recall);
    }
    Ok(())
}
