//! The two detection-style frameworks.
//!
//! * `TrajYolo` flattens backbone features into an MLP that regresses
//!   `n` change-point coordinates plus `n + 1` segment class rows.
//! * `TrajSsd` is fully convolutional: a small-kernel head emits one class
//!   row per sub-trip of `l_uni` points, with optional pointwise pyramid
//!   pooling (3P) before the head.

pub mod decode;
pub mod loss;
pub mod net;

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Mode, Trip, N_MAX};
use crate::tensor::{self, glorot_uniform, Param, Tensor};

pub use decode::{decode_ssd, decode_yolo, ModelOutput, Prediction, SsdOutput, YoloOutput};
pub use loss::{
    match_ssd, match_yolo, unified_loss, CoordPair, LossBreakdown, LossWeights, SegmentTerm,
    SsdMatch,
};
use net::{Layer, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Framework {
    TrajYolo,
    TrajSsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backbone {
    Mlp,
    Cnn,
    /// CNN followed by pointwise pyramid pooling.
    Cnn3p,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PppWindow {
    /// Window as long as the feature map (global pooling).
    Global,
    Size(usize),
}

/// Architecture description. Everything derived (l_uni, output widths) is
/// computed from these fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub framework: Framework,
    pub backbone: Backbone,
    /// Conv stages (CNN backbones) or hidden dense layers (MLP backbone).
    pub layers: usize,
    /// Width of the first layer; doubles at every following layer.
    pub base_channels: usize,
    pub kernel_sizes: Vec<usize>,
    pub conv_strides: Vec<usize>,
    pub pool_sizes: Vec<usize>,
    pub ppp_windows: Vec<PppWindow>,
    /// Kernel size `k_s` of the anchored head.
    pub head_kernel: usize,
    /// Number of change-point candidates `n` of the direct-regression head.
    pub n_candidates: usize,
    pub head_hidden: Vec<usize>,
    pub dropout: f64,
    pub n_classes: usize,
    pub n_max: usize,
    /// Per-channel multiplier applied to `[speed, accel, jerk]`.
    pub input_scale: [f64; 3],
}

impl ModelSpec {
    /// 3P-CNN under the anchored framework: four conv stages with kernels
    /// 3, 3, 7, 7, four size-2 pools (l_uni = 16) and 3P windows `{N', 5}`.
    pub fn traj_ssd() -> Self {
        ModelSpec {
            framework: Framework::TrajSsd,
            backbone: Backbone::Cnn3p,
            layers: 4,
            base_channels: 64,
            kernel_sizes: vec![3, 3, 7, 7],
            conv_strides: vec![1; 4],
            pool_sizes: vec![2; 4],
            ppp_windows: vec![PppWindow::Global, PppWindow::Size(5)],
            head_kernel: 1,
            n_candidates: 2,
            head_hidden: vec![],
            dropout: 0.0,
            n_classes: Mode::COUNT,
            n_max: N_MAX,
            input_scale: [0.1, 1.0, 1.0],
        }
    }

    /// CNN under the direct-regression framework: five stages of size-3
    /// convs and size-2 pools, then a three-layer MLP head.
    pub fn traj_yolo() -> Self {
        ModelSpec {
            framework: Framework::TrajYolo,
            backbone: Backbone::Cnn,
            layers: 5,
            base_channels: 64,
            kernel_sizes: vec![3; 5],
            conv_strides: vec![1; 5],
            pool_sizes: vec![2; 5],
            ppp_windows: vec![],
            head_kernel: 1,
            n_candidates: 2,
            head_hidden: vec![256, 128],
            dropout: 0.5,
            n_classes: Mode::COUNT,
            n_max: N_MAX,
            input_scale: [0.1, 1.0, 1.0],
        }
    }

    /// MLP backbone under the direct-regression framework.
    pub fn traj_yolo_mlp() -> Self {
        ModelSpec {
            backbone: Backbone::Mlp,
            layers: 3,
            kernel_sizes: vec![],
            conv_strides: vec![],
            pool_sizes: vec![],
            ..ModelSpec::traj_yolo()
        }
    }

    /// Scale every layer width by `base / 64`, keeping the doubling rule.
    pub fn with_base_channels(mut self, base: usize) -> Self {
        self.base_channels = base;
        self
    }

    pub fn channels(&self) -> Vec<usize> {
        (0..self.layers).map(|i| self.base_channels << i).collect()
    }

    /// Product of conv strides and pool sizes.
    pub fn l_uni(&self) -> usize {
        self.conv_strides.iter().chain(&self.pool_sizes).product()
    }

    /// Head rows of the anchored framework: `ceil(n_max / l_uni)`.
    pub fn ssd_rows(&self) -> usize {
        self.n_max.div_ceil(self.l_uni())
    }

    /// Output width of the direct-regression head: `n + k (n + 1)`.
    pub fn yolo_width(&self) -> usize {
        self.n_candidates + self.n_classes * (self.n_candidates + 1)
    }

    /// Change the first pool so the downsampling product equals `target`.
    pub fn with_l_uni(mut self, target: usize) -> Result<Self> {
        let rest: usize = self.conv_strides.iter().chain(self.pool_sizes.iter().skip(1)).product();
        if self.pool_sizes.is_empty() || target == 0 || !target.is_multiple_of(rest) {
            return Err(Error::Config(format!(
                "l_uni {target} is not reachable by changing the first pool (other factors give {rest})"
            )));
        }
        self.pool_sizes[0] = target / rest;
        Ok(self)
    }

    /// Fail unless the configured strides and pools multiply to `expected`.
    pub fn expect_l_uni(&self, expected: usize) -> Result<()> {
        let actual = self.l_uni();
        if actual != expected {
            return Err(Error::Config(format!(
                "l_uni must equal the product of conv strides and pool sizes: requested {expected}, \
                 but strides {:?} and pools {:?} give {actual}",
                self.conv_strides, self.pool_sizes
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match (self.framework, self.backbone) {
            (Framework::TrajSsd, Backbone::Mlp) => {
                return bad("the anchored framework needs a convolutional backbone".into())
            }
            (Framework::TrajYolo, Backbone::Cnn3p) => {
                return bad("3P is only used by the anchored framework".into())
            }
            _ => {}
        }
        if self.layers == 0 || self.base_channels == 0 || self.n_classes == 0 || self.n_max == 0 {
            return bad("layers, base_channels, n_classes and n_max must be positive".into());
        }
        if self.backbone != Backbone::Mlp {
            for (name, v) in [
                ("kernel_sizes", &self.kernel_sizes),
                ("conv_strides", &self.conv_strides),
                ("pool_sizes", &self.pool_sizes),
            ] {
                if v.len() != self.layers {
                    return bad(format!("{name} has {} entries for {} layers", v.len(), self.layers));
                }
                if v.contains(&0) {
                    return bad(format!("{name} entries must be positive"));
                }
            }
            if self.kernel_sizes.iter().any(|k| k % 2 == 0) {
                return bad("conv kernel sizes must be odd to preserve length".into());
            }
        }
        if self.backbone == Backbone::Cnn3p && self.ppp_windows.is_empty() {
            return bad("3P backbone needs at least one window".into());
        }
        if self.framework == Framework::TrajSsd && self.head_kernel.is_multiple_of(2) {
            return bad("head kernel size must be odd".into());
        }
        if self.framework == Framework::TrajYolo && self.n_candidates == 0 {
            return bad("at least one change-point candidate is required".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.framework == Framework::TrajSsd {
            let rows = self.backbone_len();
            if rows != self.ssd_rows() {
                return bad(format!("backbone yields {rows} rows, expected {}", self.ssd_rows()));
            }
            for w in &self.ppp_windows {
                if let PppWindow::Size(k) = w {
                    if *k == 0 || *k > rows {
                        return bad(format!("3P window {k} exceeds feature length {rows}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Sequence length after the convolutional backbone.
    fn backbone_len(&self) -> usize {
        let mut len = self.n_max;
        for i in 0..self.conv_strides.len().min(self.pool_sizes.len()) {
            len = len.div_ceil(self.conv_strides[i]);
            len = len.div_ceil(self.pool_sizes[i]);
        }
        len
    }

    fn build<R: Rng>(&self, rng: &mut R) -> (Network, Vec<Param>) {
        let mut params = Vec::new();
        let mut layers = Vec::new();
        let push_param = |params: &mut Vec<Param>, name: String, t: Tensor| {
            params.push(Param::new(name, t));
            params.len() - 1
        };
        let mut width = 3;
        let mut len = self.n_max;
        if self.backbone != Backbone::Mlp {
            for (i, &ch) in self.channels().iter().enumerate() {
                let ks = self.kernel_sizes[i];
                let w = glorot_uniform(rng, &[ch, width, ks], width * ks, ch * ks);
                let w = push_param(&mut params, format!("conv{i}.weight"), w);
                let b = push_param(&mut params, format!("conv{i}.bias"), Tensor::zeros(&[ch]));
                layers.push(Layer::Conv {
                    w,
                    b,
                    stride: self.conv_strides[i],
                    padding: ks / 2,
                });
                layers.push(Layer::Relu);
                layers.push(Layer::MaxPool {
                    size: self.pool_sizes[i],
                });
                len = len.div_ceil(self.conv_strides[i]).div_ceil(self.pool_sizes[i]);
                width = ch;
            }
        }
        match self.framework {
            Framework::TrajSsd => {
                if self.backbone == Backbone::Cnn3p {
                    layers.push(Layer::Ppp {
                        windows: self
                            .ppp_windows
                            .iter()
                            .map(|w| match w {
                                PppWindow::Global => None,
                                PppWindow::Size(k) => Some(*k),
                            })
                            .collect(),
                    });
                    width *= self.ppp_windows.len() + 1;
                }
                let ks = self.head_kernel;
                let w = glorot_uniform(rng, &[self.n_classes, width, ks], width * ks, self.n_classes * ks);
                let w = push_param(&mut params, "head.weight".into(), w);
                let b = push_param(&mut params, "head.bias".into(), Tensor::zeros(&[self.n_classes]));
                layers.push(Layer::Conv {
                    w,
                    b,
                    stride: 1,
                    padding: ks / 2,
                });
                layers.push(Layer::Sigmoid);
            }
            Framework::TrajYolo => {
                layers.push(Layer::Flatten);
                let mut n_in = if self.backbone == Backbone::Mlp {
                    3 * self.n_max
                } else {
                    width * len
                };
                let mut dense = |layers: &mut Vec<Layer>, params: &mut Vec<Param>, name: &str, n_out: usize, n_in: usize| {
                    let w = glorot_uniform(rng, &[n_out, n_in], n_in, n_out);
                    let w = push_param(params, format!("{name}.weight"), w);
                    let b = push_param(params, format!("{name}.bias"), Tensor::zeros(&[n_out]));
                    layers.push(Layer::Dense { w, b });
                };
                if self.backbone == Backbone::Mlp {
                    for (i, &h) in self.channels().iter().enumerate() {
                        dense(&mut layers, &mut params, &format!("fc{i}"), h, n_in);
                        layers.push(Layer::Relu);
                        n_in = h;
                    }
                }
                for (i, &h) in self.head_hidden.iter().enumerate() {
                    dense(&mut layers, &mut params, &format!("head{i}"), h, n_in);
                    layers.push(Layer::Relu);
                    if i < 2 && self.dropout > 0.0 {
                        layers.push(Layer::Dropout { p: self.dropout });
                    }
                    n_in = h;
                }
                dense(&mut layers, &mut params, "head.out", self.yolo_width(), n_in);
                layers.push(Layer::Sigmoid);
            }
        }
        (Network { layers }, params)
    }
}

/// A built network plus its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub net: Network,
    pub params: Vec<Param>,
}

impl Model {
    /// Glorot-initialised weights, zero biases.
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (net, params) = spec.build(&mut rng);
        Ok(Model { spec, net, params })
    }

    /// All parameters zero; every output is then sigmoid(0) = 0.5.
    pub fn zeroed(spec: ModelSpec) -> Result<Self> {
        let mut m = Model::new(spec, 0)?;
        m.params.iter_mut().for_each(|p| p.value.fill(0.0));
        Ok(m)
    }

    /// Downsampling factor read off the built layer stack.
    pub fn l_uni(&self) -> usize {
        self.net.downsampling()
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Padded, scaled, channel-major network input.
    pub fn input_tensor(&self, features: &[[f64; 3]]) -> Result<Tensor> {
        let n_max = self.spec.n_max;
        if features.len() > n_max {
            return Err(Error::Shape(format!(
                "trip of {} points exceeds n_max {n_max}",
                features.len()
            )));
        }
        let mut x = vec![0.0; 3 * n_max];
        for (i, f) in features.iter().enumerate() {
            for c in 0..3 {
                x[c * n_max + i] = f[c] * self.spec.input_scale[c];
            }
        }
        Tensor::from_vec(&[3, n_max], x)
    }

    fn to_output(&self, y: &Tensor) -> ModelOutput {
        let k = self.spec.n_classes;
        match self.spec.framework {
            Framework::TrajSsd => {
                let s = y.dim(1);
                let d = y.data();
                ModelOutput::Ssd(SsdOutput {
                    class_probs: (0..s).map(|r| (0..k).map(|j| d[j * s + r]).collect()).collect(),
                })
            }
            Framework::TrajYolo => {
                let n = self.spec.n_candidates;
                let d = y.data();
                ModelOutput::Yolo(YoloOutput {
                    coords: d[..n].to_vec(),
                    class_probs: d[n..].chunks(k).map(|c| c.to_vec()).collect(),
                })
            }
        }
    }

    /// Inference forward pass (dropout off).
    pub fn forward(&self, features: &[[f64; 3]]) -> Result<ModelOutput> {
        let x = self.input_tensor(features)?;
        let y = self.net.infer(&self.params, x)?;
        Ok(self.to_output(&y))
    }

    pub fn decode(&self, out: &ModelOutput, n: usize) -> Prediction {
        match out {
            ModelOutput::Yolo(o) => decode_yolo(o, n, self.spec.n_max),
            ModelOutput::Ssd(o) => decode_ssd(o, n, self.spec.l_uni()),
        }
    }

    pub fn predict(&self, features: &[[f64; 3]]) -> Result<Prediction> {
        let out = self.forward(features)?;
        Ok(self.decode(&out, features.len()))
    }

    /// Loss of a decoded output against a labeled trip, with the gradient
    /// with respect to the raw head output (post-sigmoid, network layout).
    pub fn output_loss(&self, y: &Tensor, labels: &[Mode], w: LossWeights) -> (LossBreakdown, Tensor) {
        let n_max = self.spec.n_max;
        let mut grad = Tensor::zeros(y.shape());
        let d = y.data();
        let k = self.spec.n_classes;
        match self.spec.framework {
            Framework::TrajSsd => {
                let s = y.dim(1);
                let l_uni = self.spec.l_uni();
                let rows = loss::ssd_row_targets(labels, l_uni, s);
                let probs: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|&(r, _, _)| (0..k).map(|j| d[j * s + r]).collect())
                    .collect();
                let terms: Vec<SegmentTerm<'_>> = rows
                    .iter()
                    .zip(&probs)
                    .map(|(&(_, weight, target), p)| SegmentTerm { weight, target, probs: p })
                    .collect();
                // localization is piecewise constant in the parameters: report only
                let cps = crate::ingest::derive_targets(labels).cp_indices;
                let pairs: Vec<CoordPair> = match_ssd(&cps, labels.len(), l_uni, s)
                    .iter()
                    .map(|m| CoordPair {
                        predicted: (m.candidate * l_uni) as f64 / n_max as f64,
                        target: m.cp_index as f64 / n_max as f64,
                    })
                    .collect();
                let loss = unified_loss(&pairs, &terms, w);
                let g = grad.data_mut();
                for &(r, weight, target) in &rows {
                    for j in 0..k {
                        let t = if j == target.index() { 1.0 } else { 0.0 };
                        g[j * s + r] = 2.0 * w.cls * weight * (d[j * s + r] - t);
                    }
                }
                (loss, grad)
            }
            Framework::TrajYolo => {
                let n = self.spec.n_candidates;
                let t = loss::yolo_targets(labels, n, n_max);
                let pairs: Vec<CoordPair> = t
                    .coords
                    .iter()
                    .enumerate()
                    .filter_map(|(i, c)| c.map(|target| CoordPair { predicted: d[i], target }))
                    .collect();
                let terms: Vec<SegmentTerm<'_>> = t
                    .segments
                    .iter()
                    .map(|&(r, weight, target)| SegmentTerm {
                        weight,
                        target,
                        probs: &d[n + r * k..n + (r + 1) * k],
                    })
                    .collect();
                let loss = unified_loss(&pairs, &terms, w);
                let g = grad.data_mut();
                for (i, c) in t.coords.iter().enumerate() {
                    if let Some(target) = c {
                        g[i] = 2.0 * w.loc * (d[i] - target);
                    }
                }
                for &(r, weight, target) in &t.segments {
                    for j in 0..k {
                        let tv = if j == target.index() { 1.0 } else { 0.0 };
                        let idx = n + r * k + j;
                        g[idx] += 2.0 * w.cls * weight * (d[idx] - tv);
                    }
                }
                (loss, grad)
            }
        }
    }

    /// Unnormalised loss of one trip (dropout off).
    pub fn trip_loss(&self, trip: &Trip, w: LossWeights) -> Result<LossBreakdown> {
        let x = self.input_tensor(&trip.features)?;
        let y = self.net.infer(&self.params, x)?;
        Ok(self.output_loss(&y, &trip.labels, w).0)
    }

    /// Forward with dropout, loss, and backward. Gradients are scaled by
    /// `grad_scale` and accumulated into `grads`.
    pub fn trip_loss_backward<R: Rng>(
        &self,
        trip: &Trip,
        w: LossWeights,
        grad_scale: f64,
        rng: &mut R,
        grads: &mut [Tensor],
    ) -> Result<LossBreakdown> {
        let x = self.input_tensor(&trip.features)?;
        let (y, trace) = self.net.forward(&self.params, x, true, rng)?;
        let (loss, mut dy) = self.output_loss(&y, &trip.labels, w);
        dy.scale(grad_scale);
        self.net.backward(&self.params, trace, dy, grads)?;
        Ok(loss)
    }

    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.params.iter().map(|p| Tensor::zeros(p.value.shape())).collect()
    }

    /// Write a self-describing checkpoint (spec JSON + parameters).
    pub fn save(&self, path: &Path) -> Result<()> {
        let desc = serde_json::to_string(&self.spec)?;
        tensor::write_checkpoint(BufWriter::new(fs::File::create(path)?), &desc, &self.params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck = tensor::read_checkpoint(BufReader::new(fs::File::open(path)?))?;
        Model::from_checkpoint(ck)
    }

    pub fn from_checkpoint(ck: tensor::Checkpoint) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(&ck.descriptor)?;
        let mut m = Model::new(spec, 0)?;
        if ck.params.len() != m.params.len() {
            return Err(Error::Format(format!(
                "checkpoint has {} parameters, architecture needs {}",
                ck.params.len(),
                m.params.len()
            )));
        }
        for (p, (name, t)) in m.params.iter_mut().zip(ck.params) {
            if p.name != name || p.value.shape() != t.shape() {
                return Err(Error::Format(format!(
                    "parameter `{name}` {:?} does not match `{}` {:?}",
                    t.shape(),
                    p.name,
                    p.value.shape()
                )));
            }
            p.value = t;
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_ssd() -> ModelSpec {
        ModelSpec::traj_ssd().with_base_channels(4)
    }

    fn small_yolo() -> ModelSpec {
        ModelSpec {
            head_hidden: vec![8, 8],
            ..ModelSpec::traj_yolo().with_base_channels(2)
        }
    }

    #[test]
    fn default_architecture_numbers() {
        let s = ModelSpec::traj_ssd();
        assert_eq!(s.l_uni(), 16);
        assert_eq!(s.ssd_rows(), 25);
        assert_eq!(s.channels(), vec![64, 128, 256, 512]);
        let y = ModelSpec::traj_yolo();
        assert_eq!(y.yolo_width(), 17);
        assert!(s.validate().is_ok() && y.validate().is_ok());
        assert!(ModelSpec::traj_yolo_mlp().validate().is_ok());
    }

    #[test]
    fn invalid_combinations() {
        let mut s = ModelSpec::traj_ssd();
        s.backbone = Backbone::Mlp;
        assert!(s.validate().is_err());
        let mut y = ModelSpec::traj_yolo();
        y.backbone = Backbone::Cnn3p;
        assert!(y.validate().is_err());
        let mut s = ModelSpec::traj_ssd();
        s.kernel_sizes.pop();
        assert!(s.validate().is_err());
        assert!(ModelSpec::traj_ssd().expect_l_uni(32).is_err());
        assert!(ModelSpec::traj_ssd().expect_l_uni(16).is_ok());
    }

    #[test]
    fn l_uni_rewrites() {
        let s = ModelSpec::traj_ssd().with_l_uni(8).unwrap();
        assert_eq!(s.pool_sizes, vec![1, 2, 2, 2]);
        assert_eq!(s.ssd_rows(), 50);
        let s = ModelSpec::traj_ssd().with_l_uni(24).unwrap();
        assert_eq!(s.ssd_rows(), 17);
        assert!(s.validate().is_ok());
        assert!(ModelSpec::traj_ssd().with_l_uni(12).is_err());
    }

    #[test]
    fn zero_params_give_half() {
        let m = Model::zeroed(small_ssd()).unwrap();
        let f = vec![[3.0, 0.1, -0.2]; 57];
        match m.forward(&f).unwrap() {
            ModelOutput::Ssd(o) => {
                assert_eq!(o.class_probs.len(), 25);
                assert!(o.class_probs.iter().flatten().all(|v| *v == 0.5));
            }
            _ => panic!(),
        }
        let m = Model::zeroed(small_yolo()).unwrap();
        match m.forward(&f).unwrap() {
            ModelOutput::Yolo(o) => {
                assert_eq!(o.coords.len() + o.class_probs.len() * 5, 17);
                assert!(o.coords.iter().chain(o.class_probs.iter().flatten()).all(|v| *v == 0.5));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn ssd_rows_follow_l_uni() {
        let spec = small_ssd().with_l_uni(8).unwrap();
        let m = Model::new(spec, 1).unwrap();
        assert_eq!(m.l_uni(), 8);
        match m.forward(&vec![[1.0, 0.0, 0.0]; 30]).unwrap() {
            ModelOutput::Ssd(o) => assert_eq!(o.class_probs.len(), 50),
            _ => panic!(),
        }
    }

    #[test]
    fn forward_is_deterministic_and_bounded() {
        let m = Model::new(small_yolo(), 9).unwrap();
        let f: Vec<[f64; 3]> = (0..120).map(|i| [i as f64 * 0.1, 0.2, -0.1]).collect();
        let a = m.forward(&f).unwrap();
        assert_eq!(a, m.forward(&f).unwrap());
        assert!(m.forward(&vec![[0.0; 3]; 401]).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = Model::new(small_ssd(), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        m.save(&p).unwrap();
        let back = Model::load(&p).unwrap();
        assert_eq!(back, m);
    }
}
