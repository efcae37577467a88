//! Seeded synthetic trips with known modes and change points.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{offset_point, GpsPoint};
use crate::ingest::{build_trip, split_dataset, DatasetSplit, Mode, PreprocessConfig, Trip};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Indexed by `Mode::index()`.
    pub profiles: [SpeedProfile; Mode::COUNT],
    /// Per-point probability that a bus starts a stop.
    pub bus_stop_prob: f64,
    /// Stop duration range in points, inclusive.
    pub stop_len: (usize, usize),
    pub dt: f64,
    /// Trip length range in points, inclusive.
    pub length_range: (usize, usize),
    /// Probability of 0, 1 and 2 change points.
    pub cp_weights: [f64; 3],
    pub min_segment: usize,
    /// Cap on |dv/dt| while the speed follows its target, m/s^2.
    pub max_accel: f64,
    /// Relative std of the within-segment speed fluctuation.
    pub speed_noise: f64,
    /// Heading random walk std per point, radians.
    pub heading_jitter: f64,
    pub origin: (f64, f64),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let p = |mean, std| SpeedProfile { mean, std };
        SynthConfig {
            profiles: [p(1.4, 0.4), p(4.0, 1.0), p(7.0, 3.0), p(13.0, 4.0), p(28.0, 5.0)],
            bus_stop_prob: 0.05,
            stop_len: (3, 10),
            dt: 2.0,
            length_range: (60, 400),
            cp_weights: [0.3, 0.4, 0.3],
            min_segment: 20,
            max_accel: 1.5,
            speed_noise: 0.1,
            heading_jitter: 0.05,
            origin: (39.9, 116.4),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0) {
            return bad(format!("sampling interval {} must be positive", self.dt));
        }
        if self.profiles.windows(2).any(|w| w[0].mean >= w[1].mean) {
            return bad("mode speed means must be strictly increasing".into());
        }
        if self.profiles.iter().any(|p| p.mean <= 0.0 || p.std < 0.0) {
            return bad("speed means must be positive and stds non-negative".into());
        }
        let (lo, hi) = self.length_range;
        if lo == 0 || lo > hi {
            return bad(format!("bad trip length range {lo}..={hi}"));
        }
        if self.min_segment == 0 || self.min_segment > lo {
            return bad("min_segment must be in [1, shortest trip]".into());
        }
        if self.cp_weights.iter().any(|w| *w < 0.0) || self.cp_weights.iter().sum::<f64>() <= 0.0 {
            return bad("change-point weights must be non-negative with a positive sum".into());
        }
        if self.stop_len.0 == 0 || self.stop_len.0 > self.stop_len.1 {
            return bad("bad stop length range".into());
        }
        if !(0.0..=1.0).contains(&self.bus_stop_prob) || self.max_accel <= 0.0 {
            return bad("bus_stop_prob must be in [0, 1] and max_accel positive".into());
        }
        Ok(())
    }
}

fn draw_cp_count<R: Rng>(cfg: &SynthConfig, rng: &mut R) -> usize {
    let total: f64 = cfg.cp_weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in cfg.cp_weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    2
}

/// Random segment plan: modes differ between neighbours and every segment
/// has at least `min_segment` points.
pub fn random_plan<R: Rng>(cfg: &SynthConfig, rng: &mut R) -> Vec<(Mode, usize)> {
    let n = rng.random_range(cfg.length_range.0..=cfg.length_range.1);
    let max_cps = n / cfg.min_segment - 1;
    let n_cp = draw_cp_count(cfg, rng).min(max_cps);
    // distribute the slack above the minimum lengths
    let slack = n - (n_cp + 1) * cfg.min_segment;
    let mut cuts: Vec<usize> = (0..n_cp).map(|_| rng.random_range(0..=slack)).collect();
    cuts.sort_unstable();
    let mut lens = Vec::with_capacity(n_cp + 1);
    let mut prev = 0;
    for c in cuts.iter().copied().chain(std::iter::once(slack)) {
        lens.push(cfg.min_segment + c - prev);
        prev = c;
    }
    let mut plan: Vec<(Mode, usize)> = Vec::with_capacity(lens.len());
    for len in lens {
        let mode = match plan.last() {
            None => *Mode::ALL.choose(rng).unwrap(),
            Some(&(last, _)) => {
                let others: Vec<Mode> = Mode::ALL.iter().copied().filter(|m| *m != last).collect();
                *others.choose(rng).unwrap()
            }
        };
        plan.push((mode, len));
    }
    plan
}

/// Trip from a random plan.
pub fn generate_trip<R: Rng>(cfg: &SynthConfig, rng: &mut R) -> Result<Trip> {
    let plan = random_plan(cfg, rng);
    generate_trip_with_plan(cfg, &plan, rng)
}

/// Simulate the points of a fixed `(mode, points)` plan and run the standard
/// preprocessing chain on them.
pub fn generate_trip_with_plan<R: Rng>(cfg: &SynthConfig, plan: &[(Mode, usize)], rng: &mut R) -> Result<Trip> {
    cfg.validate()?;
    let (points, labels) = simulate(cfg, plan, rng)?;
    let pre = PreprocessConfig {
        n_min: 1,
        n_max: usize::MAX,
        ..PreprocessConfig::default()
    };
    let trip = build_trip(&points, &labels, &pre)?;
    if trip.len() != points.len() {
        return Err(Error::Precondition(format!(
            "synthetic trip lost {} points to outlier removal",
            points.len() - trip.len()
        )));
    }
    Ok(trip)
}

fn simulate<R: Rng>(cfg: &SynthConfig, plan: &[(Mode, usize)], rng: &mut R) -> Result<(Vec<GpsPoint>, Vec<Mode>)> {
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let total: usize = plan.iter().map(|p| p.1).sum();
    let mut points = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let lat = cfg.origin.0 + rng.random_range(-0.1..0.1);
    let lng = cfg.origin.1 + rng.random_range(-0.1..0.1);
    let t0 = 1.2e9 + rng.random_range(0.0..3.0e7_f64).floor();
    let mut p = GpsPoint::new(t0, lat, lng)?;
    let mut heading = rng.random_range(0.0..std::f64::consts::TAU);
    let mut speed = 0.0_f64;
    let dv_max = cfg.max_accel * cfg.dt;
    for &(mode, len) in plan {
        let prof = cfg.profiles[mode.index()];
        let floor = 0.25 * prof.mean;
        let cruise = (prof.mean + prof.std * unit.sample(rng)).max(floor);
        let mut wobble = 0.0;
        let mut stop_left = 0usize;
        for _ in 0..len {
            if points.is_empty() {
                points.push(p);
                labels.push(mode);
                continue;
            }
            wobble = 0.8 * wobble + 0.6 * cfg.speed_noise * cruise * unit.sample(rng);
            if mode == Mode::Bus && stop_left == 0 && rng.random::<f64>() < cfg.bus_stop_prob {
                stop_left = rng.random_range(cfg.stop_len.0..=cfg.stop_len.1);
            }
            let target = if stop_left > 0 {
                stop_left -= 1;
                0.0
            } else {
                (cruise + wobble).max(0.5 * floor)
            };
            speed += (target - speed).clamp(-dv_max, dv_max);
            speed = speed.max(0.0);
            heading += cfg.heading_jitter * unit.sample(rng);
            p = offset_point(&p, speed * cfg.dt, heading, cfg.dt);
            points.push(p);
            labels.push(mode);
        }
    }
    Ok((points, labels))
}

/// Per-trip generator: stream `index` of the configured seed.
pub fn trip_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n_trips` trips generated in parallel, each from its own stream.
pub fn generate_trips(cfg: &SynthConfig, n_trips: usize) -> Result<Vec<Trip>> {
    cfg.validate()?;
    (0..n_trips)
        .into_par_iter()
        .map(|i| generate_trip(cfg, &mut trip_rng(cfg.seed, i as u64)))
        .collect()
}

/// Generated trips split 7:1:2 under the configured seed.
pub fn generate_dataset(cfg: &SynthConfig, n_trips: usize) -> Result<DatasetSplit> {
    Ok(split_dataset(generate_trips(cfg, n_trips)?, cfg.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::remove_outliers;

    #[test]
    fn same_seed_same_trip() {
        let cfg = SynthConfig::default();
        let a = generate_trip(&cfg, &mut trip_rng(3, 7)).unwrap();
        let b = generate_trip(&cfg, &mut trip_rng(3, 7)).unwrap();
        assert_eq!(a, b);
        let c = generate_trip(&cfg, &mut trip_rng(3, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn forced_plans() {
        let cfg = SynthConfig::default();
        let mut rng = trip_rng(0, 0);
        let t = generate_trip_with_plan(&cfg, &[(Mode::Walk, 100), (Mode::Car, 100)], &mut rng).unwrap();
        assert_eq!(t.cp_coords, vec![0.5]);
        assert_eq!(t.cp_indices, vec![100]);
        let cfg0 = SynthConfig {
            cp_weights: [1.0, 0.0, 0.0],
            ..SynthConfig::default()
        };
        let t = generate_trip(&cfg0, &mut rng).unwrap();
        assert!(t.cp_indices.is_empty() && t.cp_coords.is_empty());
    }

    #[test]
    fn trips_are_valid_and_clean() {
        let cfg = SynthConfig::default();
        for i in 0..200 {
            let mut rng = trip_rng(11, i);
            let plan = random_plan(&cfg, &mut rng);
            let t = generate_trip_with_plan(&cfg, &plan, &mut rng).unwrap();
            t.validate(20, 400).unwrap();
            assert_eq!(remove_outliers(&t.points).len(), t.len());
            let mut at = 0;
            let planned: Vec<usize> = plan[..plan.len() - 1]
                .iter()
                .map(|s| {
                    at += s.1;
                    at
                })
                .collect();
            assert_eq!(t.cp_indices, planned);
        }
    }

    #[test]
    fn mode_speeds_are_ordered() {
        let cfg = SynthConfig::default();
        let mut means = Vec::new();
        for m in Mode::ALL {
            let mut sum = 0.0;
            for i in 0..30 {
                let mut rng = trip_rng(5, (m.index() * 100 + i) as u64);
                let t = generate_trip_with_plan(&cfg, &[(m, 100)], &mut rng).unwrap();
                sum += t.features[20..].iter().map(|f| f[0]).sum::<f64>() / 80.0;
            }
            means.push(sum / 30.0);
        }
        assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
    }

    #[test]
    fn rejects_unordered_profiles() {
        let mut cfg = SynthConfig::default();
        cfg.profiles.swap(0, 1);
        assert!(cfg.validate().is_err());
        let cfg = SynthConfig {
            dt: 0.0,
            ..SynthConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dataset_split_sizes() {
        let cfg = SynthConfig::default();
        let d = generate_dataset(&cfg, 50).unwrap();
        assert_eq!((d.train.len(), d.val.len(), d.test.len()), (35, 5, 10));
        assert_eq!(d, generate_dataset(&cfg, 50).unwrap());
    }
}
