use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use spssot::config::{self, load_config};
use spssot::data::{generate_synthetic, write_csv};
use spssot::eval::{load_data, run_cell, run_experiment, DataSource, ExperimentConfig, ExperimentReport, Method};
use spssot::trainer::TrainConfig;

#[derive(Parser)]
#[command(name = "spssot", version, about = "Semi-supervised transport domain adaptation for imbalanced tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic source/target pair as CSV.
    Generate {
        #[command(flatten)]
        settings: Settings,
        /// Directory receiving source.csv and target.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and score one method on one seed.
    Train {
        #[command(flatten)]
        settings: Settings,
        #[arg(long, default_value = "spssot")]
        method: String,
        /// Directory for checkpoints, logs and the manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every configured method on every seed and write the report.
    Experiment {
        #[command(flatten)]
        settings: Settings,
    },
    /// Re-render a saved report.json as a table.
    Report {
        input: PathBuf,
    },
}

/// Overrides layered on top of the config file, in this order.
#[derive(Args)]
struct Settings {
    /// `key = value` experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single run seed (replaces the seed list).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    labeled_frac: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    theta_s: Option<f64>,
    #[arg(long)]
    members: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, value_parser = ["exact", "sinkhorn"])]
    solver: Option<String>,
    /// Any other config key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Settings {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p).with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        push("seeds", self.seed.map(|s| s.to_string()));
        push("labeled_frac", self.labeled_frac.map(|v| v.to_string()));
        push("alpha", self.alpha.map(|v| v.to_string()));
        push("beta", self.beta.map(|v| v.to_string()));
        push("lambda", self.lambda.map(|v| v.to_string()));
        push("theta_s", self.theta_s.map(|v| v.to_string()));
        push("members", self.members.map(|v| v.to_string()));
        push("bins", self.bins.map(|v| v.to_string()));
        push("iters", self.iters.map(|v| v.to_string()));
        push("solver", self.solver.clone());
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {kv:?}");
            };
            let k = k.trim();
            if !config::KEYS.contains(&k) {
                bail!("unknown config key {k:?}");
            }
            pairs.push((k.to_string(), v.trim().to_string()));
        }
        for (k, v) in pairs {
            config::apply(&mut cfg, &k, &v)?;
        }
        config::validate(&cfg)?;
        Ok(cfg)
    }
}

fn run() -> Result<bool> {
    match Cli::parse().command {
        Command::Generate { settings, out } => {
            let cfg = settings.resolve()?;
            let DataSource::Synthetic(spec) = &cfg.data else {
                bail!("generate needs synthetic data settings");
            };
            let (source, target) = generate_synthetic(spec)?;
            fs::create_dir_all(&out)?;
            write_csv(&source, &out.join("source.csv"))?;
            write_csv(&target, &out.join("target.csv"))?;
            println!("wrote {} source and {} target rows to {}", source.len(), target.len(), out.display());
            Ok(true)
        }
        Command::Train { settings, method, out } => {
            let cfg = settings.resolve()?;
            let method = Method::parse(&method).with_context(|| format!("unknown method {method:?}"))?;
            let seed = cfg.seeds[0];
            let (source, target) = load_data(&cfg)?;
            let (model, auc) = run_cell(method, seed, &source, &target, &cfg)?;
            if let Some(dir) = out {
                model.write_artifacts(&dir, &TrainConfig { seed, ..cfg.train.clone() })?;
            }
            println!("{}\tseed {}\tauc {:.4}", method.name(), seed, auc);
            Ok(true)
        }
        Command::Experiment { settings } => {
            let cfg = settings.resolve()?;
            let report = run_experiment(&cfg)?;
            print!("{}", report.to_table());
            Ok(report.succeeded())
        }
        Command::Report { input } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            print!("{}", ExperimentReport::from_json(&text)?.to_table());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
