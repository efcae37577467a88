//! Mini-batch Adam training with step decay and early stopping.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{DatasetSplit, Trip};
use crate::models::{LossBreakdown, LossWeights, Model};
use crate::tensor::{Adam, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub lr_decay_every: usize,
    pub lr_floor: f64,
    pub patience: usize,
    pub min_delta: f64,
    pub loss: LossWeights,
    /// Trips per gradient accumulation chunk. Chunks are reduced in a fixed
    /// order, so results do not depend on the thread count.
    pub chunk: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            max_epochs: 100,
            lr: 1e-3,
            lr_decay: 0.1,
            lr_decay_every: 10,
            lr_floor: 1e-7,
            patience: 15,
            min_delta: 1e-3,
            loss: LossWeights::default(),
            chunk: 8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.batch_size > 0
            && self.max_epochs > 0
            && self.lr > 0.0
            && self.lr_decay > 0.0
            && self.lr_decay_every > 0
            && self.lr_floor > 0.0
            && self.patience > 0
            && self.min_delta >= 0.0
            && self.chunk > 0;
        if !ok {
            return Err(Error::Config("training parameters must be positive".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Config(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        Ok(())
    }
}

/// Step-decayed rate for a 0-based epoch, held at the last value not below
/// the floor.
pub fn lr_at(epoch: usize, cfg: &TrainConfig) -> f64 {
    let mut k = (epoch / cfg.lr_decay_every) as i32;
    loop {
        let lr = cfg.lr * cfg.lr_decay.powi(k);
        if k == 0 || lr >= cfg.lr_floor * (1.0 - 1e-9) {
            return lr;
        }
        k -= 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    #[serde(rename = "val_Ap")]
    pub val_ap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochEval {
    /// Loss per real point.
    pub loss: f64,
    pub breakdown: LossBreakdown,
    pub accuracy: f64,
    pub points: usize,
}

/// Loss and point accuracy with dropout off.
pub fn evaluate_epoch(model: &Model, trips: &[Trip], w: LossWeights) -> Result<EpochEval> {
    let per_trip: Vec<(LossBreakdown, usize)> = trips
        .par_iter()
        .map(|t| {
            let loss = model.trip_loss(t, w)?;
            let pred = model.predict(&t.features)?;
            let hits = pred.labels.iter().zip(&t.labels).filter(|(a, b)| a == b).count();
            Ok((loss, hits))
        })
        .collect::<Result<_>>()?;
    let mut breakdown = LossBreakdown::default();
    let mut hits = 0;
    for (l, h) in per_trip {
        breakdown += l;
        hits += h;
    }
    let points: usize = trips.iter().map(|t| t.len()).sum();
    let denom = points.max(1) as f64;
    Ok(EpochEval {
        loss: breakdown.total() / denom,
        breakdown: LossBreakdown {
            loc: breakdown.loc / denom,
            cls: breakdown.cls / denom,
        },
        accuracy: hits as f64 / denom,
        points,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub model: Model,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

fn dropout_rng(seed: u64, epoch: usize, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(((epoch as u64) << 32) | sample as u64);
    rng
}

/// One optimizer step over `batch`; returns the summed loss.
fn train_batch(
    model: &mut Model,
    adam: &mut Adam,
    batch: &[&Trip],
    cfg: &TrainConfig,
    epoch: usize,
    first_sample: usize,
) -> Result<LossBreakdown> {
    let real: usize = batch.iter().map(|t| t.len()).sum();
    let scale = 1.0 / real.max(1) as f64;
    let chunks: Vec<(Vec<Tensor>, LossBreakdown)> = {
        let model = &*model;
        batch
            .par_chunks(cfg.chunk)
            .enumerate()
            .map(|(ci, chunk)| {
                let mut grads = model.zero_grads();
                let mut loss = LossBreakdown::default();
                for (j, trip) in chunk.iter().enumerate() {
                    let mut rng = dropout_rng(cfg.seed, epoch, first_sample + ci * cfg.chunk + j);
                    loss += model.trip_loss_backward(trip, cfg.loss, scale, &mut rng, &mut grads)?;
                }
                Ok((grads, loss))
            })
            .collect::<Result<_>>()?
    };
    let mut loss = LossBreakdown::default();
    for p in model.params.iter_mut() {
        p.zero_grad();
    }
    for (grads, l) in chunks {
        loss += l;
        for (p, g) in model.params.iter_mut().zip(&grads) {
            p.grad.add_assign(g);
        }
    }
    adam.step(&mut model.params);
    Ok(loss)
}

/// Train on `split.train`, early-stop on `split.val`, return the best model.
pub fn train(model: Model, split: &DatasetSplit, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(model, split, cfg, |_| {})
}

/// As [`train`], calling `on_epoch` after every epoch.
pub fn train_with<F: FnMut(&EpochRecord)>(
    mut model: Model,
    split: &DatasetSplit,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::Precondition("training set is empty".into()));
    }
    if split.val.is_empty() {
        return Err(Error::Precondition("validation set is empty".into()));
    }
    let mut adam = Adam::new(&model.params, cfg.lr);
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, 0usize, model.params.clone());
    let mut reference = f64::INFINITY;
    let mut waited = 0;
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..split.train.len()).collect();
    for epoch in 0..cfg.max_epochs {
        adam.lr = lr_at(epoch, cfg);
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        shuffle_rng.set_stream(epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut shuffle_rng);
        let mut train_sum = 0.0;
        let mut train_points = 0usize;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Trip> = idx.iter().map(|&i| &split.train[i]).collect();
            let l = train_batch(&mut model, &mut adam, &batch, cfg, epoch, b * cfg.batch_size)?;
            if !l.total().is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: l.total(),
                });
            }
            train_sum += l.total();
            train_points += batch.iter().map(|t| t.len()).sum::<usize>();
        }
        let val = evaluate_epoch(&model, &split.val, cfg.loss)?;
        if !val.loss.is_finite() {
            return Err(Error::Diverged { epoch, loss: val.loss });
        }
        let rec = EpochRecord {
            epoch,
            lr: adam.lr,
            train_loss: train_sum / train_points as f64,
            val_loss: val.loss,
            val_ap: val.accuracy,
        };
        on_epoch(&rec);
        history.push(rec);
        if val.loss < best.0 {
            best = (val.loss, epoch, model.params.clone());
        }
        if val.loss < reference - cfg.min_delta {
            reference = val.loss;
            waited = 0;
        } else {
            waited += 1;
            if waited >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }
    model.params = best.2;
    Ok(TrainOutcome {
        model,
        history,
        best_epoch: best.1,
        stopped_early,
    })
}

/// One JSON object per line.
pub fn write_history<W: Write>(history: &[EpochRecord], mut out: W) -> Result<()> {
    for rec in history {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
