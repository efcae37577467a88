//! The unified localization + classification objective and candidate
//! matching for both frameworks.

use serde::{Deserialize, Serialize};

use crate::ingest::{derive_targets, Mode};

pub const LAMBDA_LOC: f64 = 300.0;
pub const LAMBDA_CLS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub loc: f64,
    pub cls: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            loc: LAMBDA_LOC,
            cls: LAMBDA_CLS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub loc: f64,
    pub cls: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.loc + self.cls
    }
}

impl std::ops::AddAssign for LossBreakdown {
    fn add_assign(&mut self, o: Self) {
        self.loc += o.loc;
        self.cls += o.cls;
    }
}

/// One matched change point: predicted and true coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordPair {
    pub predicted: f64,
    pub target: f64,
}

/// One segment's contribution: its length weight, its true mode, and the
/// predicted class probabilities assigned to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentTerm<'a> {
    pub weight: f64,
    pub target: Mode,
    pub probs: &'a [f64],
}

/// `loc * sum (l - l_hat)^2 + cls * sum_i N_i sum_j (p_ij - p_hat_ij)^2`
/// with one-hot `p`.
pub fn unified_loss(coords: &[CoordPair], segments: &[SegmentTerm<'_>], w: LossWeights) -> LossBreakdown {
    let loc = coords
        .iter()
        .map(|c| (c.target - c.predicted).powi(2))
        .sum::<f64>();
    let cls = segments
        .iter()
        .map(|s| s.weight * one_hot_sq_err(s.probs, s.target))
        .sum::<f64>();
    LossBreakdown {
        loc: w.loc * loc,
        cls: w.cls * cls,
    }
}

fn one_hot_sq_err(probs: &[f64], target: Mode) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let t = if j == target.index() { 1.0 } else { 0.0 };
            (t - p).powi(2)
        })
        .sum()
}

/// Per-candidate localization target for the direct-regression head:
/// candidate `i` is responsible for the `i`-th true change point, and
/// candidates beyond the true count are ignored. Inputs are change-point
/// indices; targets are normalised by `n_max`.
pub fn match_yolo(cp_indices: &[usize], n_candidates: usize, n_max: usize) -> Vec<Option<f64>> {
    (0..n_candidates)
        .map(|i| cp_indices.get(i).map(|&c| c as f64 / n_max as f64))
        .collect()
}

/// A true change point paired with the candidate boundary nearest to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SsdMatch {
    pub cp_index: usize,
    /// Candidate number `c`; the boundary sits at point `c * l_uni`.
    pub candidate: usize,
}

/// Nearest-candidate assignment. Candidates are the interior boundaries
/// `c * l_uni` with `1 <= c < rows` that lie inside the trip; ties go to
/// the earlier candidate. Change points without any candidate are dropped.
pub fn match_ssd(cp_indices: &[usize], trip_len: usize, l_uni: usize, rows: usize) -> Vec<SsdMatch> {
    let last = ((trip_len.saturating_sub(1)) / l_uni).min(rows.saturating_sub(1));
    if last == 0 {
        return Vec::new();
    }
    cp_indices
        .iter()
        .map(|&cp| {
            let lo = (cp / l_uni).clamp(1, last);
            let hi = (lo + 1).min(last);
            let d = |c: usize| (c * l_uni).abs_diff(cp);
            let candidate = if d(hi) < d(lo) { hi } else { lo };
            SsdMatch { cp_index: cp, candidate }
        })
        .collect()
}

/// Classification and localization targets for the direct-regression head.
#[derive(Debug, Clone, PartialEq)]
pub struct YoloTargets {
    pub coords: Vec<Option<f64>>,
    /// `(predicted segment row, weight, mode)`.
    pub segments: Vec<(usize, f64, Mode)>,
}

/// Segment `i` of the prediction is trained against the `i`-th true
/// segment. True segments past the last predicted one are folded into it:
/// their lengths add to its weight and its target is the final true mode.
pub fn yolo_targets(labels: &[Mode], n_candidates: usize, n_max: usize) -> YoloTargets {
    let t = derive_targets(labels);
    let coords = match_yolo(&t.cp_indices, n_candidates, n_max);
    let rows = n_candidates + 1;
    let mut segments: Vec<(usize, f64, Mode)> = t
        .segments
        .iter()
        .take(rows)
        .enumerate()
        .map(|(i, s)| (i, s.len as f64, s.mode))
        .collect();
    if t.segments.len() > rows {
        let extra: usize = t.segments[rows..].iter().map(|s| s.len).sum();
        let last_mode = t.segments.last().unwrap().mode;
        let row = segments.last_mut().unwrap();
        row.1 += extra as f64;
        row.2 = last_mode;
    }
    YoloTargets { coords, segments }
}

/// Sub-trip targets for the anchored head: majority mode among the real
/// points of each row (ties to the mode seen first), weighted by the count
/// of real points. Rows holding only padding are absent.
pub fn ssd_row_targets(labels: &[Mode], l_uni: usize, rows: usize) -> Vec<(usize, f64, Mode)> {
    let mut out = Vec::new();
    for (r, chunk) in labels.chunks(l_uni).enumerate().take(rows) {
        let mut counts = [0usize; Mode::COUNT];
        let mut first_seen = [usize::MAX; Mode::COUNT];
        for (i, m) in chunk.iter().enumerate() {
            counts[m.index()] += 1;
            first_seen[m.index()] = first_seen[m.index()].min(i);
        }
        let best = (0..Mode::COUNT)
            .filter(|&j| counts[j] > 0)
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(first_seen[b].cmp(&first_seen[a])))
            .unwrap();
        out.push((r, chunk.len() as f64, Mode::ALL[best]));
    }
    out
}
