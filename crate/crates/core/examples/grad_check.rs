//! Finite-difference check of a full TrajSSD model's parameter gradients.
//!
//! `cargo run --release --example grad_check`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trajseg::models::{LossWeights, Model, ModelSpec};
use trajseg::synth::{generate_trip, SynthConfig};
use trajseg::tensor::grad_check;

fn main() -> trajseg::Result<()> {
    let mut model = Model::new(ModelSpec::traj_ssd().with_base_channels(4), 1)?;
    for p in model.params.iter_mut().filter(|p| p.name.ends_with("bias")) {
        p.value.fill(0.01);
    }
    let cfg = SynthConfig {
        length_range: (60, 120),
        ..SynthConfig::default()
    };
    let trip = generate_trip(&cfg, &mut ChaCha8Rng::seed_from_u64(8))?;
    let w = LossWeights::default();
    let mut grads = model.zero_grads();
    model.trip_loss_backward(&trip, w, 1.0, &mut ChaCha8Rng::seed_from_u64(0), &mut grads)?;

    for (pi, p) in model.params.iter().enumerate() {
        let n = p.value.len().min(8);
        let f = |v: &[f64]| {
            let mut m = model.clone();
            m.params[pi].value.data_mut()[..n].copy_from_slice(v);
            m.trip_loss(&trip, w).map(|l| l.cls).unwrap()
        };
        let r = grad_check(f, &p.value.data()[..n], &grads[pi].data()[..n], 1e-4);
        println!("{:<14} {:>2} entries  max rel err {:.2e}  {}", p.name, n, r.max_rel_error, if r.passed() { "ok" } else { "FAIL" });
    }
    Ok(())
}
