use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use trajseg::cli;
use trajseg::config::{keys_help, RunConfig};

#[derive(Parser)]
#[command(name = "trajseg", version, about = "Transportation mode identification from GPS trajectories")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Expected l_uni; must equal the product of conv strides and pool sizes.
    #[arg(long)]
    luni: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(p) = &self.config {
            cfg.apply_file(p).with_context(|| format!("reading {}", p.display()))?;
        }
        for pair in &self.set {
            cfg.set_pair(pair)?;
        }
        if let Some(s) = self.seed {
            cfg.set("seed", &s.to_string())?;
        }
        if let Some(l) = self.luni {
            cfg.set("model.l_uni", &l.to_string())?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a GeoLife directory into a dataset file.
    Ingest {
        geolife_dir: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic dataset file.
    Synth {
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train a model on the training split of a dataset.
    Train {
        dataset: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// History file; defaults to `<out>.history.jsonl`.
        #[arg(long)]
        history: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint on one split of a dataset.
    Eval {
        dataset: PathBuf,
        #[arg(short, long)]
        checkpoint: PathBuf,
        /// JSON metrics report.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Per-point predictions for a PLT file or dataset file.
    Infer {
        input: PathBuf,
        #[arg(short, long)]
        checkpoint: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// One-knob-at-a-time sweep, e.g. `n_cp=1,2,3;l_uni=8,16,32`.
    Ablate {
        dataset: PathBuf,
        #[arg(long)]
        sweep: String,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Ingest { geolife_dir, out, common } => {
            let s = cli::cmd_ingest(&geolife_dir, &out, &common.load()?)?;
            println!(
                "users {}  plt files {}  raw points {}  labeled points {}  trips {}",
                s.users, s.plt_files, s.raw_points, s.labeled_points, s.trips
            );
        }
        Cmd::Synth { out, common } => {
            let n = cli::cmd_synth(&common.load()?, &out)?;
            println!("wrote {n} trips to {}", out.display());
        }
        Cmd::Train {
            dataset,
            out,
            history,
            common,
        } => {
            let s = cli::cmd_train(&dataset, &common.load()?, &out, history.as_deref(), |r| {
                eprintln!(
                    "epoch {:>3}  lr {:.0e}  train {:.4}  val {:.4}  val A_p {:.4}",
                    r.epoch, r.lr, r.train_loss, r.val_loss, r.val_ap
                )
            })?;
            println!(
                "best epoch {} (val loss {:.4}) of {}; checkpoint {}",
                s.best_epoch,
                s.best_val_loss,
                s.epochs,
                s.checkpoint.display()
            );
        }
        Cmd::Eval {
            dataset,
            checkpoint,
            out,
            common,
        } => {
            let r = cli::cmd_eval(&dataset, &checkpoint, &common.load()?, out.as_deref())?;
            print!("{}", r.to_table());
        }
        Cmd::Infer {
            input,
            checkpoint,
            out,
            common,
        } => {
            let n = cli::cmd_infer(&input, &checkpoint, &common.load()?, &out)?;
            println!("wrote {n} rows to {}", out.display());
        }
        Cmd::Ablate { dataset, sweep, common } => {
            let rows = cli::cmd_ablate(&dataset, &common.load()?, &sweep, |r| {
                eprintln!("{} = {}: A_p {:.3}", r.knob, r.value, r.accuracy)
            })?;
            print!("{}", cli::render_ablation(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let keys = keys_help();
    let mut cmd = Cli::command();
    for name in ["ingest", "synth", "train", "eval", "infer", "ablate"] {
        cmd = cmd.mut_subcommand(name, |c| c.after_help(keys.clone()));
    }
    let cli = match Cli::from_arg_matches(&cmd.get_matches()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
