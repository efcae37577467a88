//! Named run parameters with defaults, layered from a `key = value` file
//! and command-line overrides.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::OutlierThresholds;
use crate::ingest::PreprocessConfig;
use crate::models::{Backbone, Framework, LossWeights, ModelSpec, PppWindow};
use crate::synth::{SpeedProfile, SynthConfig};
use crate::train::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Float,
    Text,
    /// Comma-separated integers, or `auto`.
    IntList,
}

pub struct KeySpec {
    pub key: &'static str,
    pub default: &'static str,
    pub source: &'static str,
    pub help: &'static str,
    kind: Kind,
}

const fn k(key: &'static str, default: &'static str, kind: Kind, source: &'static str, help: &'static str) -> KeySpec {
    KeySpec {
        key,
        default,
        source,
        help,
        kind,
    }
}

use Kind::*;

pub static KEYS: &[KeySpec] = &[
    k("seed", "0", Int, "run", "single source of all randomness"),
    k("n_min", "20", Int, "preprocessing", "shortest trip kept, points"),
    k("n_max", "400", Int, "preprocessing", "longest trip; longer trips are chunked"),
    k("max_speed", "80", Float, "preprocessing", "outlier speed bound, m/s"),
    k("max_accel", "10", Float, "preprocessing", "outlier |acceleration| bound, m/s^2"),
    k("trip_gap_s", "1200", Float, "preprocessing", "time gap that starts a new trip, s"),
    k("synth.trips", "2000", Int, "synthetic data", "number of generated trips"),
    k("synth.dt", "2", Float, "synthetic data", "sampling interval, s"),
    k("synth.min_len", "60", Int, "synthetic data", "shortest generated trip, points"),
    k("synth.max_len", "400", Int, "synthetic data", "longest generated trip, points"),
    k("synth.min_segment", "20", Int, "synthetic data", "shortest generated segment, points"),
    k("synth.cp_weights", "0.3,0.4,0.3", Text, "synthetic data", "probability of 0, 1, 2 change points"),
    k("synth.bus_stop_prob", "0.05", Float, "synthetic data", "per-point bus stop probability"),
    k("synth.speed_mean", "1.4,4,7,13,28", Text, "synthetic data", "walk,bike,bus,car,train mean speed, m/s"),
    k("synth.speed_std", "0.4,1,3,4,5", Text, "synthetic data", "walk,bike,bus,car,train speed std, m/s"),
    k("model.framework", "ssd", Text, "architecture", "ssd (anchored sub-trips) or yolo (direct regression)"),
    k("model.backbone", "auto", Text, "architecture", "cnn3p, cnn or mlp; auto = cnn3p for ssd, cnn for yolo"),
    k("model.layers", "auto", Int, "architecture", "conv stages (4 for ssd, 5 for yolo) or MLP layers"),
    k("model.base_channels", "64", Int, "architecture", "first layer width, doubled per layer"),
    k("model.kernel_sizes", "auto", IntList, "architecture", "per-stage conv kernels; ssd 3,3,7,7, yolo 3s"),
    k("model.conv_strides", "auto", IntList, "architecture", "per-stage conv strides; 1s"),
    k("model.pool_sizes", "auto", IntList, "architecture", "per-stage max-pool sizes; 2s"),
    k("model.l_uni", "16", Int, "training", "expected stride/pool product of the anchored head"),
    k("model.ppp_windows", "global,5", Text, "architecture", "3P windows; `global` spans the whole feature map"),
    k("model.k_s", "1", Int, "architecture", "anchored head kernel size"),
    k("model.n_cp", "2", Int, "training", "change-point candidates of the direct-regression head"),
    k("model.head_hidden", "256,128", IntList, "architecture", "hidden widths of the direct-regression MLP head"),
    k("model.dropout", "0.5", Float, "experimental setup", "dropout on the first two head MLP layers"),
    k("train.batch_size", "128", Int, "experimental setup", "trips per batch"),
    k("train.max_epochs", "100", Int, "experimental setup", "epoch cap"),
    k("train.lr", "0.001", Float, "experimental setup", "initial Adam learning rate"),
    k("train.lr_decay", "0.1", Float, "experimental setup", "multiplier applied every decay period"),
    k("train.lr_decay_every", "10", Int, "experimental setup", "decay period, epochs"),
    k("train.lr_floor", "1e-7", Float, "experimental setup", "the rate never decays below this"),
    k("train.patience", "15", Int, "experimental setup", "epochs without improvement before stopping"),
    k("train.min_delta", "0.001", Float, "experimental setup", "smallest validation loss decrease that counts"),
    k("train.lambda_loc", "300", Float, "experimental setup", "localization loss weight"),
    k("train.lambda_cls", "1", Float, "experimental setup", "classification loss weight"),
    k("train.chunk", "8", Int, "run", "trips per deterministic gradient accumulation chunk"),
    k("eval.split", "test", Text, "experimental setup", "train, val, test or all (7:1:2 split under seed)"),
    k("eval.utw_window_s", "120", Float, "comparison", "uniform time window baseline width, s"),
];

fn spec_of(key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|s| s.key == key)
}

/// Current value of every key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            values: KEYS.iter().map(|s| (s.key, s.default.to_string())).collect(),
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{x}` in `{v}`")))
        })
        .collect()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let spec = spec_of(key).ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        let value = value.trim();
        let ok = match spec.kind {
            Int => value.parse::<u64>().is_ok() || (value == "auto" && spec.default == "auto"),
            Float => value.parse::<f64>().is_ok_and(f64::is_finite),
            Text => !value.is_empty(),
            IntList => value == "auto" || parse_list::<usize>(key, value).is_ok(),
        };
        if !ok {
            return Err(Error::Config(format!("`{key}`: invalid value `{value}`")));
        }
        self.values.insert(spec.key, value.to_string());
        Ok(())
    }

    /// Apply `key=value`.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
        self.set(k.trim(), v)
    }

    /// Apply a `key = value` file; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_pair(line)
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_text(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("key `{key}` missing from registry"))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)
            .parse()
            .map_err(|_| Error::Config(format!("`{key}` = `{}` is not a number", self.get(key))))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.get(key) {
            "auto" => Ok(None),
            v => parse_list(key, v).map(Some),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.num("seed")
    }

    /// Every key with its value and source, in registry order.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for spec in KEYS {
            let _ = writeln!(s, "{} = {}", spec.key, self.get(spec.key));
        }
        s
    }

    pub fn preprocess(&self) -> Result<PreprocessConfig> {
        Ok(PreprocessConfig {
            thresholds: OutlierThresholds {
                max_speed: self.num("max_speed")?,
                max_accel: self.num("max_accel")?,
            },
            gap_s: self.num("trip_gap_s")?,
            n_min: self.num("n_min")?,
            n_max: self.num("n_max")?,
        })
    }

    pub fn synth(&self) -> Result<SynthConfig> {
        let means: Vec<f64> = parse_list("synth.speed_mean", self.get("synth.speed_mean"))?;
        let stds: Vec<f64> = parse_list("synth.speed_std", self.get("synth.speed_std"))?;
        let w: Vec<f64> = parse_list("synth.cp_weights", self.get("synth.cp_weights"))?;
        if means.len() != 5 || stds.len() != 5 || w.len() != 3 {
            return Err(Error::Config(
                "synth.speed_mean and synth.speed_std need 5 values, synth.cp_weights 3".into(),
            ));
        }
        let mut profiles = [SpeedProfile { mean: 0.0, std: 0.0 }; 5];
        for i in 0..5 {
            profiles[i] = SpeedProfile {
                mean: means[i],
                std: stds[i],
            };
        }
        let max_len: usize = self.num("synth.max_len")?;
        let n_max: usize = self.num("n_max")?;
        if max_len > n_max {
            return Err(Error::Config(format!("synth.max_len {max_len} exceeds n_max {n_max}")));
        }
        let cfg = SynthConfig {
            profiles,
            bus_stop_prob: self.num("synth.bus_stop_prob")?,
            dt: self.num("synth.dt")?,
            length_range: (self.num("synth.min_len")?, max_len),
            cp_weights: [w[0], w[1], w[2]],
            min_segment: self.num("synth.min_segment")?,
            seed: self.seed()?,
            ..SynthConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn framework(&self) -> Result<Framework> {
        match self.get("model.framework") {
            "ssd" => Ok(Framework::TrajSsd),
            "yolo" => Ok(Framework::TrajYolo),
            v => Err(Error::Config(format!("model.framework must be ssd or yolo, got `{v}`"))),
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let framework = self.framework()?;
        let backbone = match (self.get("model.backbone"), framework) {
            ("auto", Framework::TrajSsd) | ("cnn3p", _) => Backbone::Cnn3p,
            ("auto", Framework::TrajYolo) | ("cnn", _) => Backbone::Cnn,
            ("mlp", _) => Backbone::Mlp,
            (v, _) => return Err(Error::Config(format!("unknown model.backbone `{v}`"))),
        };
        let mut spec = match (framework, backbone) {
            (Framework::TrajYolo, Backbone::Mlp) => ModelSpec::traj_yolo_mlp(),
            (Framework::TrajYolo, _) => ModelSpec::traj_yolo(),
            (Framework::TrajSsd, _) => ModelSpec::traj_ssd(),
        };
        spec.backbone = backbone;
        if spec.framework == Framework::TrajSsd && backbone == Backbone::Cnn {
            spec.ppp_windows.clear();
        }
        if self.get("model.layers") != "auto" {
            let layers: usize = self.num("model.layers")?;
            if layers != spec.layers && backbone != Backbone::Mlp {
                // stretch the default per-stage lists to the new depth
                let fit = |v: &Vec<usize>| (0..layers).map(|i| v[i.min(v.len() - 1)]).collect();
                spec.kernel_sizes = fit(&spec.kernel_sizes);
                spec.conv_strides = fit(&spec.conv_strides);
                spec.pool_sizes = fit(&spec.pool_sizes);
            }
            spec.layers = layers;
        }
        spec.base_channels = self.num("model.base_channels")?;
        if let Some(v) = self.list("model.kernel_sizes")? {
            spec.kernel_sizes = v;
        }
        if let Some(v) = self.list("model.conv_strides")? {
            spec.conv_strides = v;
        }
        if let Some(v) = self.list("model.pool_sizes")? {
            spec.pool_sizes = v;
        }
        if backbone == Backbone::Cnn3p {
            spec.ppp_windows = self
                .get("model.ppp_windows")
                .split(',')
                .map(|w| match w.trim() {
                    "global" => Ok(PppWindow::Global),
                    x => x
                        .parse()
                        .map(PppWindow::Size)
                        .map_err(|_| Error::Config(format!("bad 3P window `{x}`"))),
                })
                .collect::<Result<_>>()?;
        }
        spec.head_kernel = self.num("model.k_s")?;
        spec.n_candidates = self.num("model.n_cp")?;
        if framework == Framework::TrajYolo {
            spec.head_hidden = self.list("model.head_hidden")?.unwrap_or_default();
            spec.dropout = self.num("model.dropout")?;
        }
        spec.n_max = self.num("n_max")?;
        if framework == Framework::TrajSsd {
            spec.expect_l_uni(self.num("model.l_uni")?)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn train(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            batch_size: self.num("train.batch_size")?,
            max_epochs: self.num("train.max_epochs")?,
            lr: self.num("train.lr")?,
            lr_decay: self.num("train.lr_decay")?,
            lr_decay_every: self.num("train.lr_decay_every")?,
            lr_floor: self.num("train.lr_floor")?,
            patience: self.num("train.patience")?,
            min_delta: self.num("train.min_delta")?,
            loss: LossWeights {
                loc: self.num("train.lambda_loc")?,
                cls: self.num("train.lambda_cls")?,
            },
            chunk: self.num("train.chunk")?,
            seed: self.seed()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Help text listing every key, its default and where the value comes from.
pub fn keys_help() -> String {
    let mut s = String::from("Configuration keys (set with --set key=value or a --config file):\n");
    for spec in KEYS {
        let _ = writeln!(
            s,
            "  {:<22} default {:<14} [{}] {}",
            spec.key, spec.default, spec.source, spec.help
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build() {
        let c = RunConfig::default();
        let p = c.preprocess().unwrap();
        assert_eq!((p.n_min, p.n_max, p.gap_s), (20, 400, 1200.0));
        let spec = c.model_spec().unwrap();
        assert_eq!(spec, ModelSpec::traj_ssd());
        let t = c.train().unwrap();
        assert_eq!(t, TrainConfig::default());
        assert_eq!(c.synth().unwrap(), SynthConfig::default());
        let mut y = c.clone();
        y.set("model.framework", "yolo").unwrap();
        assert_eq!(y.model_spec().unwrap(), ModelSpec::traj_yolo());
    }

    #[test]
    fn unknown_and_bad_values() {
        let mut c = RunConfig::default();
        assert!(c.set("model.lr", "1").is_err());
        assert!(c.set("train.batch_size", "-3").is_err());
        assert!(c.set("train.lr", "nan").is_err());
        let e = c.apply_text("seed = 3\n# comment\n\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("line 4"), "{e}");
        assert_eq!(c.get("seed"), "3");
    }

    #[test]
    fn l_uni_must_match_pools() {
        let mut c = RunConfig::default();
        c.set("model.l_uni", "32").unwrap();
        let e = c.model_spec().unwrap_err().to_string();
        assert!(e.contains("product"), "{e}");
        c.set("model.pool_sizes", "2,2,2,4").unwrap();
        assert_eq!(c.model_spec().unwrap().ssd_rows(), 13);
    }

    #[test]
    fn help_lists_every_key() {
        let h = keys_help();
        for s in KEYS {
            assert!(h.contains(s.key));
        }
    }
}
