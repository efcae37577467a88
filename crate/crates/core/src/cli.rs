//! The batch commands behind the `trajseg` binary.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{evaluate_model, evaluate_utw, CpScore, EvalReport};
use crate::ingest::{
    ingest_geolife, load_dataset, parse_plt, prepare_unlabeled, save_dataset, split_dataset, IngestSummary, Mode,
    Trip, DATASET_MAGIC,
};
use crate::models::Model;
use crate::synth::generate_trips;
use crate::train::{train as run_training, write_history, EpochRecord};

pub const METRICS_FORMAT: &str = "trajseg-metrics-v1";

/// Ingest a GeoLife tree (or one user directory) into a dataset file.
pub fn cmd_ingest(geolife_dir: &Path, out: &Path, cfg: &RunConfig) -> Result<IngestSummary> {
    if !geolife_dir.is_dir() {
        return Err(Error::Precondition(format!("{} is not a directory", geolife_dir.display())));
    }
    let (trips, summary) = ingest_geolife(geolife_dir, &cfg.preprocess()?)?;
    save_dataset(&trips, out)?;
    Ok(summary)
}

/// Generate `synth.trips` trips into a dataset file.
pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<usize> {
    let n: usize = cfg.get("synth.trips").parse().map_err(|_| Error::Config("synth.trips".into()))?;
    let trips = generate_trips(&cfg.synth()?, n)?;
    save_dataset(&trips, out)?;
    Ok(trips.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub checkpoint: PathBuf,
    pub history: PathBuf,
    pub epochs: usize,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub best_val_loss: f64,
}

/// `<checkpoint>.history.jsonl`
pub fn default_history_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".history.jsonl");
    PathBuf::from(s)
}

/// Train on the 7:1:2 split of `dataset` and write the best checkpoint and
/// the epoch history.
pub fn cmd_train(
    dataset: &Path,
    cfg: &RunConfig,
    checkpoint: &Path,
    history: Option<&Path>,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainSummary> {
    let seed = cfg.seed()?;
    let spec = cfg.model_spec()?;
    let tcfg = cfg.train()?;
    let split = split_dataset(load_dataset(dataset)?, seed);
    let model = Model::new(spec, seed)?;
    let outcome = crate::train::train_with(model, &split, &tcfg, &mut on_epoch)?;
    outcome.model.save(checkpoint)?;
    let hist_path = history.map_or_else(|| default_history_path(checkpoint), Path::to_path_buf);
    write_history(&outcome.history, BufWriter::new(fs::File::create(&hist_path)?))?;
    Ok(TrainSummary {
        checkpoint: checkpoint.to_path_buf(),
        history: hist_path,
        epochs: outcome.history.len(),
        best_epoch: outcome.best_epoch,
        stopped_early: outcome.stopped_early,
        best_val_loss: outcome.history[outcome.best_epoch].val_loss,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub format: String,
    pub split: String,
    pub report: EvalReport,
    pub utw_window_s: f64,
    pub utw: CpScore,
}

impl MetricsReport {
    pub fn to_table(&self) -> String {
        let mut s = format!("split: {} ({} trips, {} points)\n", self.split, self.report.trips, self.report.points);
        s.push_str(&self.report.to_table());
        let _ = writeln!(
            s,
            "UTW baseline ({} s): precision {:.3}  recall {:.3}",
            self.utw_window_s, self.utw.precision, self.utw.recall
        );
        s
    }
}

fn select_split(trips: Vec<Trip>, cfg: &RunConfig) -> Result<Vec<Trip>> {
    let split = split_dataset(trips, cfg.seed()?);
    match cfg.get("eval.split") {
        "train" => Ok(split.train),
        "val" => Ok(split.val),
        "test" => Ok(split.test),
        "all" => Ok([split.train, split.val, split.test].concat()),
        v => Err(Error::Config(format!("eval.split must be train, val, test or all, got `{v}`"))),
    }
}

/// Evaluate a checkpoint; writes the JSON report when `out` is given.
pub fn cmd_eval(dataset: &Path, checkpoint: &Path, cfg: &RunConfig, out: Option<&Path>) -> Result<MetricsReport> {
    let model = Model::load(checkpoint)?;
    let trips = select_split(load_dataset(dataset)?, cfg)?;
    if trips.is_empty() {
        return Err(Error::Precondition("selected split holds no trips".into()));
    }
    let window: f64 = cfg.get("eval.utw_window_s").parse().map_err(|_| Error::Config("eval.utw_window_s".into()))?;
    let report = MetricsReport {
        format: METRICS_FORMAT.into(),
        split: cfg.get("eval.split").into(),
        report: evaluate_model(&model, &trips)?,
        utw_window_s: window,
        utw: evaluate_utw(&trips, window),
    };
    if let Some(path) = out {
        let mut w = BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &report)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    Ok(report)
}

/// Per-point predictions for a PLT file or a dataset file, as CSV.
/// Returns the number of rows written.
pub fn cmd_infer(input: &Path, checkpoint: &Path, cfg: &RunConfig, out: &Path) -> Result<usize> {
    let model = Model::load(checkpoint)?;
    let text = fs::read_to_string(input)?;
    let chunks: Vec<(Vec<crate::geo::GpsPoint>, Vec<[f64; 3]>)> = if text.starts_with(DATASET_MAGIC) {
        crate::ingest::read_dataset(text.as_bytes())?
            .into_iter()
            .map(|t| (t.points, t.features))
            .collect()
    } else {
        let mut pre = cfg.preprocess()?;
        pre.n_max = pre.n_max.min(model.spec.n_max);
        prepare_unlabeled(&parse_plt(&text)?, &pre)?
    };
    let mut w = BufWriter::new(fs::File::create(out)?);
    write!(w, "trip,index,lat,lng,t,mode")?;
    for m in Mode::ALL {
        write!(w, ",p_{}", m.name())?;
    }
    writeln!(w)?;
    let mut rows = 0;
    for (ti, (points, features)) in chunks.iter().enumerate() {
        let pred = model.predict(features)?;
        for (i, p) in points.iter().enumerate() {
            write!(w, "{ti},{i},{},{},{},{}", p.lat, p.lng, p.t, pred.labels[i])?;
            for v in &pred.probs[i] {
                write!(w, ",{v:.6}")?;
            }
            writeln!(w)?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub knob: String,
    pub value: String,
    pub accuracy: f64,
    pub cp_precision: f64,
    pub cp_recall: f64,
    pub epochs: usize,
}

/// Knob names accepted by [`cmd_ablate`].
pub const ABLATION_KNOBS: [&str; 4] = ["n_cp", "lambda_loc", "l_uni", "k_s"];

/// Parse `knob=v1,v2;knob=...`.
pub fn parse_sweep(sweep: &str) -> Result<Vec<(String, Vec<String>)>> {
    let mut out = Vec::new();
    for part in sweep.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (knob, vals) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("sweep entry `{part}` is not knob=values")))?;
        let knob = knob.trim();
        if !ABLATION_KNOBS.contains(&knob) {
            return Err(Error::Config(format!(
                "unknown ablation knob `{knob}`; expected one of {ABLATION_KNOBS:?}"
            )));
        }
        let vals: Vec<String> = vals.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if vals.is_empty() {
            return Err(Error::Config(format!("no values for `{knob}`")));
        }
        out.push((knob.to_string(), vals));
    }
    if out.is_empty() {
        return Err(Error::Config("empty sweep".into()));
    }
    Ok(out)
}

fn apply_knob(cfg: &mut RunConfig, knob: &str, value: &str) -> Result<()> {
    match knob {
        "n_cp" => cfg.set("model.n_cp", value),
        "lambda_loc" => cfg.set("train.lambda_loc", value),
        "k_s" => cfg.set("model.k_s", value),
        "l_uni" => {
            let target: usize = value
                .parse()
                .map_err(|_| Error::Config(format!("l_uni `{value}` is not an integer")))?;
            let mut base = cfg.clone();
            base.set("model.l_uni", &cfg.model_spec()?.l_uni().to_string())?;
            let spec = base.model_spec()?.with_l_uni(target)?;
            let pools: Vec<String> = spec.pool_sizes.iter().map(|p| p.to_string()).collect();
            cfg.set("model.pool_sizes", &pools.join(","))?;
            cfg.set("model.l_uni", value)
        }
        _ => Err(Error::Config(format!("unknown knob `{knob}`"))),
    }
}

/// Train and test one model per sweep value, varying one knob at a time
/// from the base configuration.
pub fn cmd_ablate(
    dataset: &Path,
    cfg: &RunConfig,
    sweep: &str,
    mut on_row: impl FnMut(&AblationRow),
) -> Result<Vec<AblationRow>> {
    let plan = parse_sweep(sweep)?;
    let seed = cfg.seed()?;
    let split = split_dataset(load_dataset(dataset)?, seed);
    let mut rows = Vec::new();
    for (knob, values) in plan {
        for v in values {
            let mut c = cfg.clone();
            apply_knob(&mut c, &knob, &v)?;
            let model = Model::new(c.model_spec()?, seed)?;
            let outcome = run_training(model, &split, &c.train()?)?;
            let rep = evaluate_model(&outcome.model, &split.test)?;
            let row = AblationRow {
                knob: knob.clone(),
                value: v,
                accuracy: rep.metrics.accuracy,
                cp_precision: rep.change_points.precision,
                cp_recall: rep.change_points.recall,
                epochs: outcome.history.len(),
            };
            on_row(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn render_ablation(rows: &[AblationRow]) -> String {
    let mut s = format!(
        "{:<12}{:>8}{:>10}{:>12}{:>12}{:>8}\n",
        "knob", "value", "A_p", "CP prec", "CP recall", "epochs"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<12}{:>8}{:>10.3}{:>12.3}{:>12.3}{:>8}",
            r.knob, r.value, r.accuracy, r.cp_precision, r.cp_recall, r.epochs
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let p = parse_sweep("n_cp=1,2; l_uni=8,16").unwrap();
        assert_eq!(p[0], ("n_cp".into(), vec!["1".into(), "2".into()]));
        assert_eq!(p[1].1.len(), 2);
        assert!(parse_sweep("bogus=1").is_err());
        assert!(parse_sweep("").is_err());
        assert!(parse_sweep("k_s").is_err());
    }

    #[test]
    fn l_uni_knob_rewrites_pools() {
        let mut c = RunConfig::default();
        apply_knob(&mut c, "l_uni", "8").unwrap();
        assert_eq!(c.get("model.pool_sizes"), "1,2,2,2");
        assert_eq!(c.model_spec().unwrap().ssd_rows(), 50);
        let mut c = RunConfig::default();
        apply_knob(&mut c, "l_uni", "32").unwrap();
        assert_eq!(c.model_spec().unwrap().l_uni(), 32);
    }

    #[test]
    fn history_path() {
        assert_eq!(
            default_history_path(Path::new("out/m.ckpt")),
            PathBuf::from("out/m.ckpt.history.jsonl")
        );
    }
}
