//! `key = value` experiment files.
//!
//! One setting per line, `#` starts a comment, lists are comma-separated.
//! Unknown keys are rejected so typos surface instead of silently falling
//! back to defaults.

use std::path::{Path, PathBuf};

use crate::data::SyntheticSpec;
use crate::eval::{DataSource, ExperimentConfig, Method};
use crate::losses::GroupNormalization;
use crate::ot::{SinkhornParams, SolverKind};
use crate::sampler::HardnessKind;
use crate::trainer::{MarginalKind, MemberInit};
use crate::{Error, Result};

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "data",
    "source_csv",
    "target_csv",
    "feature_dim",
    "rotation",
    "translation",
    "minority_src",
    "minority_tgt",
    "n_src",
    "n_tgt",
    "sigma",
    "separation",
    "anisotropy",
    "data_seed",
    "labeled_frac",
    "test_frac",
    "methods",
    "seeds",
    "alpha",
    "beta",
    "lambda",
    "theta_s",
    "members",
    "bins",
    "hardness",
    "iters",
    "batch",
    "lr",
    "momentum",
    "pretrain_epochs",
    "generator",
    "classifier_hidden",
    "solver",
    "sinkhorn_eps",
    "sinkhorn_max_iters",
    "group_norm",
    "center_fraction",
    "center_margin",
    "marginals",
    "member_init",
    "balance_source",
    "baseline_ensemble",
    "standardize",
    "out_dir",
];

fn err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| err(key, format!("cannot parse {value:?}")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| num(key, v.trim())).collect()
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(err(key, format!("expected true or false, got {value:?}"))),
    }
}

/// Parsed `(key, value)` pairs in file order, with line numbers checked.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(line, format!("line {} is not key = value", n + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(err(k, format!("unknown key on line {}", n + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn synth(config: &mut ExperimentConfig) -> &mut SyntheticSpec {
    if !matches!(config.data, DataSource::Synthetic(_)) {
        config.data = DataSource::Synthetic(SyntheticSpec::default());
    }
    match &mut config.data {
        DataSource::Synthetic(s) => s,
        DataSource::Csv { .. } => unreachable!(),
    }
}

fn csv(config: &mut ExperimentConfig) -> (&mut PathBuf, &mut PathBuf) {
    if !matches!(config.data, DataSource::Csv { .. }) {
        config.data = DataSource::Csv {
            source: PathBuf::new(),
            target: PathBuf::new(),
        };
    }
    match &mut config.data {
        DataSource::Csv { source, target } => (source, target),
        DataSource::Synthetic(_) => unreachable!(),
    }
}

/// Apply one setting to `config`. Data keys act on the synthetic spec and
/// switch the data source to synthetic when needed.
pub fn apply(config: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    let t = &mut config.train;
    match key {
        "data" => match value {
            "synthetic" => {
                synth(config);
            }
            "csv" => {
                csv(config);
            }
            _ => return Err(err(key, "expected synthetic or csv")),
        },
        "source_csv" => *csv(config).0 = PathBuf::from(value),
        "target_csv" => *csv(config).1 = PathBuf::from(value),
        "feature_dim" => synth(config).feature_dim = num(key, value)?,
        "rotation" => synth(config).shift_rotation_angle = num::<f64>(key, value)?.to_radians(),
        "translation" => synth(config).shift_translation = list(key, value)?,
        "minority_src" => synth(config).minority_fraction_source = num(key, value)?,
        "minority_tgt" => synth(config).minority_fraction_target = num(key, value)?,
        "n_src" => synth(config).n_source = num(key, value)?,
        "n_tgt" => synth(config).n_target = num(key, value)?,
        "sigma" => synth(config).noise_sigma = num(key, value)?,
        "separation" => synth(config).class_separation = num(key, value)?,
        "anisotropy" => synth(config).anisotropy = num(key, value)?,
        "data_seed" => synth(config).seed = num(key, value)?,
        "labeled_frac" => config.labeled_fraction = num(key, value)?,
        "test_frac" => config.test_fraction = num(key, value)?,
        "methods" => {
            config.methods = value
                .split(',')
                .map(|m| Method::parse(m.trim()).ok_or_else(|| err(key, format!("unknown method {m:?}"))))
                .collect::<Result<_>>()?
        }
        "seeds" => config.seeds = list(key, value)?,
        "alpha" => t.weights.alpha = num(key, value)?,
        "beta" => t.weights.beta = num(key, value)?,
        "lambda" => t.weights.lambda = num(key, value)?,
        "theta_s" => t.weights.theta_s = num(key, value)?,
        "members" => t.sampler.n_members = num(key, value)?,
        "bins" => t.sampler.n_bins = num(key, value)?,
        "hardness" => {
            t.sampler.kind = match value {
                "absolute" | "absolute_error" => HardnessKind::AbsoluteError,
                "squared" | "squared_error" => HardnessKind::SquaredError,
                _ => return Err(err(key, "expected absolute or squared")),
            }
        }
        "iters" => t.iterations = num(key, value)?,
        "batch" => t.optimizer.batch_size = num(key, value)?,
        "lr" => t.optimizer.learning_rate = num(key, value)?,
        "momentum" => t.optimizer.momentum = num(key, value)?,
        "pretrain_epochs" => t.pretrain_epochs = num(key, value)?,
        "generator" => t.generator = list(key, value)?,
        "classifier_hidden" => t.classifier_hidden = list(key, value)?,
        "solver" => {
            t.solver = match value {
                "exact" => SolverKind::Exact,
                "sinkhorn" => SolverKind::Sinkhorn(match t.solver {
                    SolverKind::Sinkhorn(p) => p,
                    SolverKind::Exact => SinkhornParams::default(),
                }),
                _ => return Err(err(key, "expected exact or sinkhorn")),
            }
        }
        "sinkhorn_eps" | "sinkhorn_max_iters" => {
            let mut p = match t.solver {
                SolverKind::Sinkhorn(p) => p,
                SolverKind::Exact => SinkhornParams::default(),
            };
            if key == "sinkhorn_eps" {
                p.epsilon = num(key, value)?;
            } else {
                p.max_iters = num(key, value)?;
            }
            t.solver = SolverKind::Sinkhorn(p);
        }
        "group_norm" => {
            t.group_normalization = match value {
                "plan_mass" => GroupNormalization::PlanMass,
                "strict" => GroupNormalization::Strict,
                _ => return Err(err(key, "expected plan_mass or strict")),
            }
        }
        "center_fraction" => t.center_fraction = num(key, value)?,
        "center_margin" => t.center_margin = num(key, value)?,
        "marginals" => {
            t.marginals = match value {
                "uniform" => MarginalKind::Uniform,
                "class_matched" => MarginalKind::ClassMatched,
                _ => return Err(err(key, "expected uniform or class_matched")),
            }
        }
        "member_init" => {
            t.member_init = match value {
                "fresh" => MemberInit::Fresh,
                "warm_start" => MemberInit::WarmStart,
                _ => return Err(err(key, "expected fresh or warm_start")),
            }
        }
        "balance_source" => t.balance_source = flag(key, value)?,
        "baseline_ensemble" => config.baseline_ensemble = flag(key, value)?,
        "standardize" => config.standardize = flag(key, value)?,
        "out_dir" => config.out_dir = Some(PathBuf::from(value)),
        _ => return Err(err(key, "unknown key")),
    }
    Ok(())
}

/// Experiment settings from `text`, starting from the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    for (k, v) in parse_pairs(text)? {
        apply(&mut config, &k, &v)?;
    }
    validate(&config)?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Cross-field checks, reported against the offending key.
pub fn validate(config: &ExperimentConfig) -> Result<()> {
    let t = &config.train;
    let check = |ok: bool, key: &str, msg: &str| if ok { Ok(()) } else { Err(err(key, msg)) };
    check(!config.methods.is_empty(), "methods", "must list at least one method")?;
    check(!config.seeds.is_empty(), "seeds", "must list at least one seed")?;
    check(
        config.labeled_fraction > 0.0 && config.labeled_fraction < 1.0,
        "labeled_frac",
        "must lie in (0,1)",
    )?;
    check(config.test_fraction > 0.0 && config.test_fraction < 1.0, "test_frac", "must lie in (0,1)")?;
    check(
        config.labeled_fraction + config.test_fraction < 1.0,
        "test_frac",
        "labeled and test fractions must sum below 1",
    )?;
    for (key, w) in [
        ("alpha", t.weights.alpha),
        ("beta", t.weights.beta),
        ("lambda", t.weights.lambda),
        ("theta_s", t.weights.theta_s),
    ] {
        check(w >= 0.0 && w.is_finite(), key, "must be a nonnegative number")?;
    }
    check(t.sampler.n_members >= 1, "members", "must be at least 1")?;
    check(t.sampler.n_bins >= 1, "bins", "must be at least 1")?;
    check(
        t.optimizer.batch_size >= 2 && t.optimizer.batch_size.is_multiple_of(2),
        "batch",
        "must be a positive even number",
    )?;
    check(t.optimizer.learning_rate > 0.0, "lr", "must be positive")?;
    check(t.optimizer.momentum >= 0.0, "momentum", "must be nonnegative")?;
    check(t.generator.iter().all(|&w| w > 0), "generator", "widths must be positive")?;
    check(t.classifier_hidden.iter().all(|&w| w > 0), "classifier_hidden", "widths must be positive")?;
    if let SolverKind::Sinkhorn(p) = t.solver {
        check(p.epsilon > 0.0, "sinkhorn_eps", "must be positive")?;
    }
    check(
        t.center_fraction > 0.0 && t.center_fraction <= 1.0,
        "center_fraction",
        "must lie in (0,1]",
    )?;
    if let DataSource::Csv { source, target } = &config.data {
        check(!source.as_os_str().is_empty(), "source_csv", "is required for csv data")?;
        check(!target.as_os_str().is_empty(), "target_csv", "is required for csv data")?;
    }
    if let DataSource::Synthetic(s) = &config.data {
        s.validate().map_err(|e| err("data", e.to_string()))?;
    }
    Ok(())
}
