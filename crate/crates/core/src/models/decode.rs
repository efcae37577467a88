//! Turning head outputs into per-point class probabilities.

use serde::{Deserialize, Serialize};

use crate::ingest::Mode;

/// Direct-regression head output: `n` coordinates and `(n + 1) x k`
/// segment class probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoloOutput {
    pub coords: Vec<f64>,
    pub class_probs: Vec<Vec<f64>>,
}

/// Anchored head output: one probability row per sub-trip of `l_uni` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsdOutput {
    pub class_probs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelOutput {
    Yolo(YoloOutput),
    Ssd(SsdOutput),
}

/// Per-point decoded prediction for one trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probs: Vec<Vec<f64>>,
    pub labels: Vec<Mode>,
    /// Indices where the predicted label changes.
    pub cp_indices: Vec<usize>,
}

impl Prediction {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn from_probs(probs: Vec<Vec<f64>>) -> Self {
        let labels: Vec<Mode> = probs.iter().map(|r| argmax_mode(r)).collect();
        let cp_indices = (1..labels.len()).filter(|&i| labels[i] != labels[i - 1]).collect();
        Prediction {
            probs,
            labels,
            cp_indices,
        }
    }
}

/// First index of the maximum.
pub fn argmax_mode(row: &[f64]) -> Mode {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    Mode::from_index(best).unwrap_or(Mode::Walk)
}

/// Round half up, as used for coordinate to index conversion.
pub fn coord_to_index(coord: f64, n_max: usize) -> i64 {
    (coord * n_max as f64 + 0.5).floor() as i64
}

/// Valid boundaries from predicted coordinates.
///
/// Each coordinate becomes `round(coord * n_max)`, raised to at least 1.
/// The first coordinate that lands at or beyond `n`, or at or before the
/// previous boundary, invalidates itself and every later one.
pub fn yolo_boundaries(coords: &[f64], n: usize, n_max: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for &c in coords {
        let idx = coord_to_index(c, n_max).max(1);
        if idx >= n as i64 || out.last().is_some_and(|&p| idx <= p as i64) {
            break;
        }
        out.push(idx as usize);
    }
    out
}

/// Segment `s` (between consecutive valid boundaries) takes class row `s`.
pub fn decode_yolo(out: &YoloOutput, n: usize, n_max: usize) -> Prediction {
    let bounds = yolo_boundaries(&out.coords, n, n_max);
    let mut probs = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        while seg < bounds.len() && i >= bounds[seg] {
            seg += 1;
        }
        probs.push(out.class_probs[seg.min(out.class_probs.len() - 1)].clone());
    }
    Prediction::from_probs(probs)
}

/// Point `i` takes row `floor(i / l_uni)`.
pub fn decode_ssd(out: &SsdOutput, n: usize, l_uni: usize) -> Prediction {
    let last = out.class_probs.len().saturating_sub(1);
    let probs = (0..n)
        .map(|i| out.class_probs[(i / l_uni).min(last)].clone())
        .collect();
    Prediction::from_probs(probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn onehot(m: Mode) -> Vec<f64> {
        let mut v = vec![0.1; 5];
        v[m.index()] = 0.9;
        v
    }

    #[test]
    fn yolo_segments() {
        let out = YoloOutput {
            coords: vec![0.25, 0.5],
            class_probs: vec![onehot(Mode::Walk), onehot(Mode::Bus), onehot(Mode::Walk)],
        };
        let p = decode_yolo(&out, 400, 400);
        assert_eq!(p.len(), 400);
        assert!(p.labels[..100].iter().all(|m| *m == Mode::Walk));
        assert!(p.labels[100..200].iter().all(|m| *m == Mode::Bus));
        assert!(p.labels[200..].iter().all(|m| *m == Mode::Walk));
        assert_eq!(p.cp_indices, vec![100, 200]);
    }

    #[test]
    fn yolo_invalid_order() {
        assert_eq!(yolo_boundaries(&[0.5, 0.25], 400, 400), vec![200]);
        assert_eq!(yolo_boundaries(&[0.9, 0.95], 100, 400), Vec::<usize>::new());
        assert_eq!(yolo_boundaries(&[0.0, 0.001], 100, 400), vec![1]);
        let out = YoloOutput {
            coords: vec![0.9, 0.95],
            class_probs: vec![onehot(Mode::Car), onehot(Mode::Bus), onehot(Mode::Walk)],
        };
        let p = decode_yolo(&out, 100, 400);
        assert!(p.labels.iter().all(|m| *m == Mode::Car));
        assert!(p.cp_indices.is_empty());
    }

    #[test]
    fn ssd_rows() {
        let mut rows = vec![onehot(Mode::Walk); 2];
        rows.extend(vec![onehot(Mode::Bus); 23]);
        let out = SsdOutput { class_probs: rows };
        let p = decode_ssd(&out, 400, 16);
        assert_eq!(p.cp_indices, vec![32]);
        let p = decode_ssd(&out, 40, 16);
        assert_eq!(p.len(), 40);
        assert_eq!(p.labels[31], Mode::Walk);
        assert!(p.labels[32..].iter().all(|m| *m == Mode::Bus));
        let out = SsdOutput { class_probs: vec![onehot(Mode::Bus); 25] };
        assert!(decode_ssd(&out, 400, 16).cp_indices.is_empty());
    }

    #[test]
    fn argmax_first_wins() {
        assert_eq!(argmax_mode(&[0.5; 5]), Mode::Walk);
        assert_eq!(argmax_mode(&[0.1, 0.7, 0.7, 0.0, 0.0]), Mode::Bike);
    }
}
