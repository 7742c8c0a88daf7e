//! AUC, comparison methods, and whole experiments.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    generate_synthetic, load_csv, split_target, CsvSchema, DomainTag, Standardizer, SyntheticSpec, TabularDataset,
    TargetSplit,
};
use crate::losses::LossWeights;
use crate::nn::{Architecture, ModelParams, ProbabilityModel};
use crate::rng::{derive_seed, rng_for, tag};
use crate::sampler::HardnessConfig;
use crate::trainer::{
    draw_batch, fit_ssot_member, self_paced_ensemble, supervised_epochs, train_spssot,
    EnsembleModel, InitStatus, SsotModel, TrainConfig, TrainingLog,
};
use crate::{Error, Result};

/// Scores with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPredictions {
    scores: Vec<f64>,
    labels: Vec<u8>,
}

impl ScoredPredictions {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Dimension {
                context: "scored predictions",
                expected: scores.len(),
                actual: labels.len(),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Validation("labels must be 0 or 1".into()));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::Validation("scores must not be NaN".into()));
        }
        Ok(Self { scores, labels })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

/// Area under the ROC curve by the rank-sum statistic with midranks for
/// ties.
pub fn auc(preds: &ScoredPredictions) -> Result<f64> {
    let n_pos = preds.labels.iter().filter(|&&l| l == 1).count();
    let n_neg = preds.labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes, got {n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..preds.scores.len()).collect();
    order.sort_by(|&a, &b| preds.scores[a].total_cmp(&preds.scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && preds.scores[order[j + 1]] == preds.scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            if preds.labels[k] == 1 {
                rank_sum += mid;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spssot,
    /// Single member, no under-sampling.
    Ssot,
    /// No group entropic loss.
    SpssotNg,
    /// No centroid loss.
    SpssotNc,
    TargetOnly,
    SourceOnly,
    TrainTogether,
    TargetOnlyLinear,
    SourceOnlyLinear,
    TrainTogetherLinear,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Spssot,
        Method::Ssot,
        Method::SpssotNg,
        Method::SpssotNc,
        Method::TargetOnly,
        Method::SourceOnly,
        Method::TrainTogether,
        Method::TargetOnlyLinear,
        Method::SourceOnlyLinear,
        Method::TrainTogetherLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Spssot => "spssot",
            Method::Ssot => "ssot",
            Method::SpssotNg => "spssot_ng",
            Method::SpssotNc => "spssot_nc",
            Method::TargetOnly => "target_only",
            Method::SourceOnly => "source_only",
            Method::TrainTogether => "train_together",
            Method::TargetOnlyLinear => "target_only_linear",
            Method::SourceOnlyLinear => "source_only_linear",
            Method::TrainTogetherLinear => "train_together_linear",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    fn is_linear(self) -> bool {
        matches!(
            self,
            Method::TargetOnlyLinear | Method::SourceOnlyLinear | Method::TrainTogetherLinear
        )
    }
}

/// Where each baseline trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pools {
    Target,
    Source,
    Together,
}

/// Fresh network, supervised epochs on its pool(s), then `iterations`
/// supervised minibatch steps. `Together` runs the alternating trainer
/// with every transfer weight at zero, so it differs from the full method
/// only by those terms.
fn baseline_member(
    pools: Pools,
    source: Option<&TabularDataset>,
    labeled: Option<&TabularDataset>,
    unlabeled: &TabularDataset,
    config: &TrainConfig,
    member: usize,
) -> Result<SsotModel> {
    let pool = match pools {
        Pools::Together => {
            let cfg = TrainConfig {
                weights: LossWeights {
                    alpha: 0.0,
                    beta: 0.0,
                    lambda: 0.0,
                    ..config.weights
                },
                ..config.clone()
            };
            return fit_ssot_member(
                source.expect("source pool"),
                labeled.expect("labeled pool"),
                unlabeled,
                None,
                &cfg,
                member,
            );
        }
        Pools::Source => source.expect("source pool"),
        Pools::Target => labeled.expect("labeled pool"),
    };
    let seed = derive_seed(config.seed, &[tag::MEMBER, member as u64]);
    let mut params = ModelParams::init(config.architecture(pool.dim()), &mut rng_for(seed, &[tag::INIT]));
    let mut rng = rng_for(seed, &[tag::PRETRAIN]);
    supervised_epochs(&mut params, pool, config.pretrain_epochs, &config.optimizer, &mut rng)?;
    let mut batch_rng = rng_for(seed, &[tag::BATCH]);
    let mut steps = config.optimizer.clone();
    for _ in 0..config.iterations {
        let idx = draw_batch(pool.len(), config.optimizer.batch_size, &mut batch_rng);
        let batch = pool.select(&idx);
        steps.batch_size = idx.len();
        supervised_epochs(&mut params, &batch, 1, &steps, &mut batch_rng)?;
    }
    Ok(SsotModel {
        params,
        init_status: InitStatus::Pretrained,
        log: TrainingLog::default(),
        bins: Vec::new(),
    })
}

/// Train one method on one split.
pub fn train_method(
    method: Method,
    source: &TabularDataset,
    split: &TargetSplit,
    config: &TrainConfig,
    baseline_ensemble: bool,
) -> Result<EnsembleModel> {
    let (labeled, unlabeled) = (&split.labeled, &split.unlabeled);
    let single = TrainConfig {
        sampler: HardnessConfig {
            n_members: 1,
            ..config.sampler
        },
        ..config.clone()
    };
    let with_weights = |f: fn(&mut LossWeights)| {
        let mut c = config.clone();
        f(&mut c.weights);
        c
    };
    match method {
        Method::Spssot => train_spssot(source, labeled, unlabeled, config),
        Method::Ssot => train_spssot(source, labeled, unlabeled, &single),
        Method::SpssotNg => train_spssot(source, labeled, unlabeled, &with_weights(|w| w.lambda = 0.0)),
        Method::SpssotNc => train_spssot(source, labeled, unlabeled, &with_weights(|w| w.beta = 0.0)),
        _ => {
            let mut cfg = if baseline_ensemble { config.clone() } else { single };
            if method.is_linear() {
                let arch = Architecture::linear(source.dim());
                cfg.generator = arch.generator;
                cfg.classifier_hidden = arch.classifier_hidden;
            }
            let pools = match method {
                Method::TargetOnly | Method::TargetOnlyLinear => Pools::Target,
                Method::SourceOnly | Method::SourceOnlyLinear => Pools::Source,
                _ => Pools::Together,
            };
            let s = (pools != Pools::Target).then_some(source);
            let l = (pools != Pools::Source).then_some(labeled);
            self_paced_ensemble(s, l, &cfg, |i, s, l, _| baseline_member(pools, s, l, unlabeled, &cfg, i))
        }
    }
}

/// Score a trained model on the test pool.
pub fn score(model: &dyn ProbabilityModel, test: &TabularDataset) -> Result<ScoredPredictions> {
    ScoredPredictions::new(model.predict_positive(test.features())?, test.require_labels()?.to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Csv { source: PathBuf, target: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub labeled_fraction: f64,
    pub test_fraction: f64,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    /// Wrap baselines in the same self-paced ensemble.
    pub baseline_ensemble: bool,
    /// z-score every pool with statistics of the source pool.
    pub standardize: bool,
    /// Where reports and per-run artifacts go; `None` keeps everything in
    /// memory.
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synthetic(SyntheticSpec::default()),
            labeled_fraction: 0.01,
            test_fraction: 0.2,
            methods: vec![Method::Spssot, Method::TargetOnly, Method::SourceOnly],
            seeds: (0..5).collect(),
            train: TrainConfig::default(),
            baseline_ensemble: true,
            standardize: true,
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    /// One entry per seed, in seed order; `None` marks a failed run.
    pub aucs: Vec<Option<f64>>,
    pub mean: Option<f64>,
    /// Unbiased standard deviation; `None` with fewer than two runs.
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub method: Method,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodSummary>,
    pub failures: Vec<RunFailure>,
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1)
        .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

impl ExperimentReport {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Aligned plain-text table: one row per method, one AUC column per seed.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        let mut header = vec!["method".to_string(), "mean".into(), "std".into()];
        header.extend(self.seeds.iter().map(|s| format!("seed {s}")));
        let mut rows = vec![header];
        for m in &self.methods {
            let mut row = vec![m.method.name().to_string(), fmt(m.mean), fmt(m.std)];
            row.extend(m.aucs.iter().map(|&a| fmt(a)));
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        for f in &self.failures {
            let _ = writeln!(out, "FAILED {} seed {}: {}", f.method.name(), f.seed, f.error);
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json())?;
        fs::write(dir.join("report.txt"), self.to_table())?;
        Ok(())
    }
}

pub fn load_data(config: &ExperimentConfig) -> Result<(TabularDataset, TabularDataset)> {
    match &config.data {
        DataSource::Synthetic(spec) => generate_synthetic(spec),
        DataSource::Csv { source, target } => {
            let schema = CsvSchema::from_header(source)?;
            let s = load_csv(source, &schema, DomainTag::Source)?;
            let t = load_csv(target, &schema, DomainTag::TargetLabeled)?;
            Ok((s, t))
        }
    }
}

/// Split, standardize, train and score one (method, seed) cell.
pub fn run_cell(
    method: Method,
    seed: u64,
    source: &TabularDataset,
    target: &TabularDataset,
    config: &ExperimentConfig,
) -> Result<(EnsembleModel, f64)> {
    let mut split = split_target(target, config.labeled_fraction, config.test_fraction, seed)?;
    let mut source = source.clone();
    if config.standardize {
        let z = Standardizer::fit(&source);
        source = z.transform(&source)?;
        split.labeled = z.transform(&split.labeled)?;
        split.unlabeled = z.transform(&split.unlabeled)?;
        split.test = z.transform(&split.test)?;
    }
    let train = TrainConfig {
        seed,
        ..config.train.clone()
    };
    let model = train_method(method, &source, &split, &train, config.baseline_ensemble)?;
    let auc = auc(&score(&model, &split.test)?)?;
    Ok((model, auc))
}

/// Every method on every seed. Failed cells are recorded, not fatal; use
/// [`ExperimentReport::succeeded`] to decide the exit status.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.train.validate()?;
    if config.methods.is_empty() || config.seeds.is_empty() {
        return Err(Error::Config {
            key: if config.methods.is_empty() { "methods" } else { "seeds" }.into(),
            message: "must not be empty".into(),
        });
    }
    let (source, target) = load_data(config)?;
    let mut failures = Vec::new();
    let mut methods = Vec::new();
    for &method in &config.methods {
        let mut aucs = Vec::with_capacity(config.seeds.len());
        for &seed in &config.seeds {
            let outcome = run_cell(method, seed, &source, &target, config).and_then(|(model, auc)| {
                if let Some(dir) = &config.out_dir {
                    let cell = dir.join("runs").join(method.name()).join(format!("seed_{seed}"));
                    model.write_artifacts(&cell, &TrainConfig { seed, ..config.train.clone() })?;
                }
                Ok(auc)
            });
            match outcome {
                Ok(a) => aucs.push(Some(a)),
                Err(e) => {
                    failures.push(RunFailure {
                        method,
                        seed,
                        error: e.to_string(),
                    });
                    aucs.push(None);
                }
            }
        }
        let ok: Vec<f64> = aucs.iter().flatten().copied().collect();
        let (mean, std) = mean_std(&ok);
        methods.push(MethodSummary { method, aucs, mean, std });
    }
    let report = ExperimentReport {
        config: config.clone(),
        seeds: config.seeds.clone(),
        methods,
        failures,
    };
    if let Some(dir) = &config.out_dir {
        report.write(dir)?;
    }
    Ok(report)
}
