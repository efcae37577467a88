//! Point-wise metrics, change-point scoring and the uniform-window baseline.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{vincenty_distance, GpsPoint};
use crate::ingest::{Mode, Trip};
use crate::models::{Model, Prediction};

/// Matching radius for change-point detection.
pub const CP_RADIUS_M: f64 = 150.0;

/// Rows are ground truth, columns predictions; one GPS point per count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k == 0 || counts.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("confusion matrix must be square and non-empty".into()));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, truth: Mode, pred: Mode) {
        self.counts[truth.index()][pred.index()] += 1;
    }

    pub fn add_labels(&mut self, truth: &[Mode], pred: &[Mode]) {
        for (t, p) in truth.iter().zip(pred) {
            self.add(*t, *p);
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in r.iter_mut().zip(o) {
                *a += b;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub support: u64,
    /// `None` when nothing was predicted as this class.
    pub precision: Option<f64>,
    /// `None` when the class has no ground-truth points.
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseMetrics {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    /// Support-weighted F1 over classes with non-zero support.
    pub weighted_f1: f64,
}

pub fn pointwise_metrics(cm: &ConfusionMatrix) -> Result<PointwiseMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Precondition("confusion matrix is empty".into()));
    }
    let k = cm.k();
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = cm.counts[c][c] as f64;
            let support = cm.support(c);
            let predicted = cm.predicted(c);
            let precision = (predicted > 0).then(|| tp / predicted as f64);
            let recall = (support > 0).then(|| tp / support as f64);
            let f1 = match (precision, recall) {
                (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
                (Some(_), Some(_)) => Some(0.0),
                (None, Some(_)) => Some(0.0),
                _ => None,
            };
            ClassMetrics {
                support,
                precision,
                recall,
                f1,
            }
        })
        .collect();
    let trace: u64 = (0..k).map(|c| cm.counts[c][c]).sum();
    let weighted_f1 = per_class
        .iter()
        .filter(|m| m.support > 0)
        .map(|m| m.support as f64 * m.f1.unwrap_or(0.0))
        .sum::<f64>()
        / total as f64;
    Ok(PointwiseMetrics {
        per_class,
        accuracy: trace as f64 / total as f64,
        weighted_f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CpScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
}

impl CpScore {
    pub fn from_counts(tp: usize, n_pred: usize, n_true: usize) -> Self {
        let ratio = |num: usize, den: usize, other: usize| {
            if den > 0 {
                num as f64 / den as f64
            } else if other == 0 {
                1.0
            } else {
                0.0
            }
        };
        CpScore {
            tp,
            fp: n_pred - tp,
            fn_: n_true - tp,
            precision: ratio(tp, n_pred, n_true),
            recall: ratio(tp, n_true, n_pred),
        }
    }

    pub fn merge(&self, o: &CpScore) -> CpScore {
        let tp = self.tp + o.tp;
        CpScore::from_counts(tp, tp + self.fp + o.fp, tp + self.fn_ + o.fn_)
    }
}

fn point_order(a: &GpsPoint, b: &GpsPoint) -> std::cmp::Ordering {
    a.t.total_cmp(&b.t)
        .then(a.lat.total_cmp(&b.lat))
        .then(a.lng.total_cmp(&b.lng))
}

/// Greedy one-to-one matching: true change points in trip order each take
/// the nearest unused prediction within the radius (ties to the earlier
/// point), so the result does not depend on the order of `predicted`.
pub fn cp_score(true_cps: &[GpsPoint], predicted: &[GpsPoint]) -> CpScore {
    cp_score_within(true_cps, predicted, CP_RADIUS_M)
}

pub fn cp_score_within(true_cps: &[GpsPoint], predicted: &[GpsPoint], radius_m: f64) -> CpScore {
    let mut truth: Vec<GpsPoint> = true_cps.to_vec();
    truth.sort_by(point_order);
    let mut pred: Vec<GpsPoint> = predicted.to_vec();
    pred.sort_by(point_order);
    let mut used = vec![false; pred.len()];
    let mut tp = 0;
    for t in &truth {
        let mut best: Option<(f64, usize)> = None;
        for (j, p) in pred.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = vincenty_distance(t, p);
            if d <= radius_m && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        if let Some((_, j)) = best {
            used[j] = true;
            tp += 1;
        }
    }
    CpScore::from_counts(tp, pred.len(), truth.len())
}

/// Uniform time window proposals: the first point at or after each
/// `t0 + m * window` strictly inside the trip, as point indices.
pub fn utw_baseline(points: &[GpsPoint], window_s: f64) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    if points.len() < 2 || !(window_s > 0.0) {
        return out;
    }
    let t0 = points[0].t;
    let t_end = points[points.len() - 1].t;
    let mut m = 1.0;
    let mut i = 0;
    while t0 + m * window_s < t_end {
        let b = t0 + m * window_s;
        while i < points.len() && points[i].t < b {
            i += 1;
        }
        if i > 0 && i < points.len() && out.last() != Some(&i) {
            out.push(i);
        }
        m += 1.0;
    }
    out
}

fn points_at(trip: &Trip, idx: &[usize]) -> Vec<GpsPoint> {
    idx.iter().map(|&i| trip.points[i]).collect()
}

/// CP score of UTW proposals over a trip set.
pub fn evaluate_utw(trips: &[Trip], window_s: f64) -> CpScore {
    trips
        .iter()
        .map(|t| {
            cp_score(
                &points_at(t, &t.cp_indices),
                &points_at(t, &utw_baseline(&t.points, window_s)),
            )
        })
        .fold(CpScore::from_counts(0, 0, 0), |a, b| a.merge(&b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub trips: usize,
    pub points: u64,
    pub confusion: ConfusionMatrix,
    pub metrics: PointwiseMetrics,
    pub change_points: CpScore,
}

/// Score decoded predictions against their trips.
pub fn evaluate_predictions(trips: &[Trip], preds: &[Prediction]) -> Result<EvalReport> {
    if trips.len() != preds.len() {
        return Err(Error::Shape("one prediction per trip required".into()));
    }
    let mut cm = ConfusionMatrix::new(Mode::COUNT);
    let mut cp = CpScore::from_counts(0, 0, 0);
    for (t, p) in trips.iter().zip(preds) {
        if p.len() != t.len() {
            return Err(Error::Shape(format!("prediction of {} points for a {}-point trip", p.len(), t.len())));
        }
        cm.add_labels(&t.labels, &p.labels);
        cp = cp.merge(&cp_score(&points_at(t, &t.cp_indices), &points_at(t, &p.cp_indices)));
    }
    Ok(EvalReport {
        trips: trips.len(),
        points: cm.total(),
        metrics: pointwise_metrics(&cm)?,
        confusion: cm,
        change_points: cp,
    })
}

pub fn evaluate_model(model: &Model, trips: &[Trip]) -> Result<EvalReport> {
    let preds: Vec<Prediction> = trips
        .par_iter()
        .map(|t| model.predict(&t.features))
        .collect::<Result<_>>()?;
    evaluate_predictions(trips, &preds)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

/// Aligned text table: confusion counts with a recall column, then
/// precision and F1 rows and the summary figures.
pub fn render_table(cm: &ConfusionMatrix, m: &PointwiseMetrics) -> String {
    let names: Vec<&str> = (0..cm.k())
        .map(|i| Mode::from_index(i).map_or("?", |m| m.name()))
        .collect();
    let mut s = String::new();
    let _ = write!(s, "{:<10}", "truth\\pred");
    for n in &names {
        let _ = write!(s, "{n:>10}");
    }
    let _ = writeln!(s, "{:>10}", "recall");
    for (i, row) in cm.counts.iter().enumerate() {
        let _ = write!(s, "{:<10}", names[i]);
        for v in row {
            let _ = write!(s, "{v:>10}");
        }
        let _ = writeln!(s, "{:>10}", cell(m.per_class[i].recall));
    }
    for (label, f) in [
        ("precision", (|c: &ClassMetrics| c.precision) as fn(&ClassMetrics) -> Option<f64>),
        ("f1", |c: &ClassMetrics| c.f1),
    ] {
        let _ = write!(s, "{label:<10}");
        for c in &m.per_class {
            let _ = write!(s, "{:>10}", cell(f(c)));
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(s, "A_p = {:.3}  weighted F1 = {:.3}", m.accuracy, m.weighted_f1);
    s
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let mut s = render_table(&self.confusion, &self.metrics);
        let c = &self.change_points;
        let _ = writeln!(
            s,
            "change points @{CP_RADIUS_M} m: precision {:.3}  recall {:.3}  (tp {}, fp {}, fn {})",
            c.precision, c.recall, c.tp, c.fp, c.fn_
        );
        s
    }
}
