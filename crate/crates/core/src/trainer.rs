//! Alternating transport/gradient training of one network, and the
//! self-paced ensemble built from such networks.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::TabularDataset;
use crate::losses::{
    alignment_loss, center_subsample, centroid_loss, classification_loss, group_entropy_loss, mean_centers,
    total_objective, ClassCenters, DomainCenters, GroupNormalization, LossComponents, LossWeights,
    DEFAULT_CENTER_MARGIN,
};
use crate::nn::write_checkpoint;
use crate::nn::{OptimizerConfig, Sgd};
use crate::nn::{backward, forward, forward_features, Architecture, GradientSet, ModelParams, ProbabilityModel};
use crate::ot::{cost_matrix, effective_cost, reweight_matrix, uniform_marginal, SolverKind};
use crate::rng::{derive_seed, rng_for, tag};
use crate::sampler::{balance_pool, bin_stats_tsv, self_paced_factor, BinStats, HardnessConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Generator output widths.
    pub generator: Vec<usize>,
    /// Classifier hidden widths.
    pub classifier_hidden: Vec<usize>,
    /// Iterations per member.
    pub iterations: usize,
    /// `batch_size` is the source batch `n`; the target side draws `n/2`
    /// labeled and `n/2` unlabeled samples.
    pub optimizer: OptimizerConfig,
    pub weights: LossWeights,
    pub sampler: HardnessConfig,
    /// Supervised epochs on each labeled pool before alternating training.
    pub pretrain_epochs: usize,
    pub solver: SolverKind,
    pub group_normalization: GroupNormalization,
    pub center_fraction: f64,
    pub center_margin: f64,
    pub marginals: MarginalKind,
    pub member_init: MemberInit,
    /// Undersample the source pool for members after the first. Off by
    /// default: only the labeled target pool is balanced.
    pub balance_source: bool,
    pub seed: u64,
}

/// How ensemble members after the first obtain their starting weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberInit {
    /// Fresh random weights pretrained on the member's balanced pools.
    Fresh,
    /// Start from the first member's trained weights.
    #[default]
    WarmStart,
}

/// Source-side marginal of the batch coupling. The target side is always
/// uniform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalKind {
    Uniform,
    /// Reweight source samples per class so the source positive mass equals
    /// the expected positive mass of the target batch (labeled positives
    /// counted, unlabeled ones at the target prior).
    #[default]
    ClassMatched,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            generator: vec![256, 128],
            classifier_hidden: vec![128],
            iterations: 1000,
            optimizer: OptimizerConfig::default(),
            weights: LossWeights::default(),
            sampler: HardnessConfig::default(),
            pretrain_epochs: 100,
            solver: SolverKind::Exact,
            group_normalization: GroupNormalization::PlanMass,
            center_fraction: 0.5,
            center_margin: DEFAULT_CENTER_MARGIN,
            marginals: MarginalKind::ClassMatched,
            member_init: MemberInit::WarmStart,
            balance_source: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        self.weights.validate()?;
        self.sampler.validate()?;
        if !self.optimizer.batch_size.is_multiple_of(2) {
            return Err(Error::Validation(format!(
                "batch size {} must be even",
                self.optimizer.batch_size
            )));
        }
        if !(self.center_fraction > 0.0 && self.center_fraction <= 1.0) || !(self.center_margin >= 0.0) {
            return Err(Error::Validation("center fraction must lie in (0,1] and margin be nonnegative".into()));
        }
        Ok(())
    }

    pub fn architecture(&self, input_dim: usize) -> Architecture {
        Architecture {
            input_dim,
            generator: self.generator.clone(),
            classifier_hidden: self.classifier_hidden.clone(),
        }
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStatus {
    Pretrained,
    /// The labeled target pool had a single class; only the source phase ran.
    SourceOnlyFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub iteration: usize,
    pub lot: f64,
    pub cls: f64,
    pub group: f64,
    pub centroid: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

impl TrainingLog {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("iter\tL_lot\tL_cls\tL_g\tL_cc\ttotal\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}",
                r.iteration, r.lot, r.cls, r.group, r.centroid, r.total
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SsotModel {
    pub params: ModelParams,
    pub init_status: InitStatus,
    pub log: TrainingLog,
    /// Per-bin sampler statistics for the source and labeled pools; empty
    /// for a member trained on full pools.
    pub bins: Vec<Vec<BinStats>>,
}

#[derive(Debug, Clone)]
pub struct EnsembleModel {
    members: Vec<SsotModel>,
}

impl EnsembleModel {
    pub fn new(members: Vec<SsotModel>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyEnsemble)?;
        let dim = first.params.arch.input_dim;
        if let Some(m) = members.iter().find(|m| m.params.arch.input_dim != dim) {
            return Err(Error::Dimension {
                context: "ensemble member input",
                expected: dim,
                actual: m.params.arch.input_dim,
            });
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[SsotModel] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Write one checkpoint and one training log per member, the sampler
    /// bin statistics, and a manifest.
    pub fn write_artifacts(&self, dir: &Path, config: &TrainConfig) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut manifest = format!("config_sha256\t{}\nseed\t{}\nmembers\t{}\n", config.hash(), config.seed, self.len());
        for (i, m) in self.members.iter().enumerate() {
            let ckpt = format!("member_{i}.ckpt");
            let log = format!("member_{i}.log.tsv");
            write_checkpoint(&m.params, &dir.join(&ckpt))?;
            fs::write(dir.join(&log), m.log.to_tsv())?;
            for (p, bins) in m.bins.iter().enumerate() {
                fs::write(dir.join(format!("member_{i}.bins_{p}.tsv")), bin_stats_tsv(bins))?;
            }
            let status = match m.init_status {
                InitStatus::Pretrained => "pretrained",
                InitStatus::SourceOnlyFallback => "source_only_fallback",
            };
            let _ = writeln!(manifest, "member_{i}\t{ckpt}\t{log}\t{status}");
        }
        fs::write(dir.join("manifest.tsv"), manifest)?;
        Ok(())
    }
}

/// Mean positive-class probability over a set of networks.
struct MeanModel<'a>(Vec<&'a ModelParams>);

impl ProbabilityModel for MeanModel<'_> {
    fn input_dim(&self) -> usize {
        self.0[0].arch.input_dim
    }

    fn predict_positive(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; x.nrows()];
        for m in &self.0 {
            for (a, p) in acc.iter_mut().zip(m.predict_positive(x)?) {
                *a += p;
            }
        }
        let n = self.0.len() as f64;
        Ok(acc.into_iter().map(|a| a / n).collect())
    }
}

impl ProbabilityModel for EnsembleModel {
    fn input_dim(&self) -> usize {
        self.members[0].params.arch.input_dim
    }

    fn predict_positive(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        MeanModel(self.members.iter().map(|m| &m.params).collect()).predict_positive(x)
    }
}

/// Mean over members of the positive-class probability.
pub fn predict(ensemble: &EnsembleModel, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    ensemble.predict_positive(x)
}

/// `n` indices into a pool of `len`: without replacement when the pool is
/// large enough, otherwise with replacement.
pub fn draw_batch(len: usize, n: usize, rng: &mut impl Rng) -> Vec<usize> {
    if n <= len {
        index::sample(rng, len, n).into_vec()
    } else {
        (0..n).map(|_| rng.random_range(0..len)).collect()
    }
}

fn add_into(acc: &mut GradientSet, other: &GradientSet) {
    for (a, b) in acc.layers_mut().zip(other.layers()) {
        a.weights += &b.weights;
        a.bias += &b.bias;
    }
}

/// Mean cross-entropy gradient w.r.t. probabilities, scaled by `weight`.
fn ce_grad(probs: &Array2<f64>, labels: &[u8], weight: f64) -> Array2<f64> {
    let mut g = Array2::zeros(probs.dim());
    let n = labels.len() as f64;
    for (i, &y) in labels.iter().enumerate() {
        let p = probs[[i, y as usize]];
        if p > crate::losses::LOG_FLOOR {
            g[[i, y as usize]] = -weight / (n * p);
        }
    }
    g
}

/// Supervised cross-entropy epochs over `pool` in shuffled minibatches.
pub fn supervised_epochs(
    params: &mut ModelParams,
    pool: &TabularDataset,
    epochs: usize,
    optimizer: &OptimizerConfig,
    rng: &mut impl Rng,
) -> Result<()> {
    let labels = pool.require_labels()?;
    if pool.is_empty() {
        return Ok(());
    }
    let mut sgd = Sgd::new(optimizer.clone());
    let mut order: Vec<usize> = (0..pool.len()).collect();
    for _ in 0..epochs {
        use rand::seq::SliceRandom;
        order.shuffle(rng);
        for chunk in order.chunks(optimizer.batch_size) {
            let x = pool.features().select(Axis(0), chunk);
            let y: Vec<u8> = chunk.iter().map(|&i| labels[i]).collect();
            let cache = forward(params, x.view())?;
            let g = ce_grad(&cache.probs, &y, 1.0);
            let grads = backward(params, &cache, Some(g.view()), None)?;
            sgd.step(params, &grads)?;
        }
    }
    Ok(())
}

fn member_seed(config: &TrainConfig, member: usize) -> u64 {
    derive_seed(config.seed, &[tag::MEMBER, member as u64])
}

/// Fresh network pretrained by supervised cross-entropy on `source`, then on
/// `labeled`, for `pretrain_epochs` each. A single-class labeled pool skips
/// the second phase.
pub fn initialize_ssot(
    source: &TabularDataset,
    labeled: &TabularDataset,
    config: &TrainConfig,
    member: usize,
) -> Result<(ModelParams, InitStatus)> {
    config.validate()?;
    if source.is_empty() || labeled.is_empty() {
        return Err(Error::Precondition("initialization needs nonempty labeled pools".into()));
    }
    source.require_labels()?;
    let seed = member_seed(config, member);
    let mut params = ModelParams::init(config.architecture(source.dim()), &mut rng_for(seed, &[tag::INIT]));
    let mut rng = rng_for(seed, &[tag::PRETRAIN]);
    supervised_epochs(&mut params, source, config.pretrain_epochs, &config.optimizer, &mut rng)?;
    let status = match labeled.class_counts() {
        Some([a, b]) if a > 0 && b > 0 => {
            supervised_epochs(&mut params, labeled, config.pretrain_epochs, &config.optimizer, &mut rng)?;
            InitStatus::Pretrained
        }
        _ => InitStatus::SourceOnlyFallback,
    };
    Ok((params, status))
}

fn pool_centers(
    params: &ModelParams,
    pool: &TabularDataset,
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<DomainCenters> {
    let labels = pool.require_labels()?;
    let idx = center_subsample(labels, fraction, rng)?;
    let h = forward_features(params, pool.features().select(Axis(0), &idx).view())?;
    let sub: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
    mean_centers(h.view(), &sub)
}

/// Alternating optimization: per iteration, fix the network and solve the
/// label-adaptive coupling on a fresh batch, then fix the coupling and take
/// one SGD step on the full objective.
///
/// `target_prior` is the target positive rate used by class-matched
/// marginals; `None` takes it from `labeled`.
pub fn train_ssot(
    mut params: ModelParams,
    source: &TabularDataset,
    labeled: &TabularDataset,
    unlabeled: &TabularDataset,
    target_prior: Option<f64>,
    config: &TrainConfig,
    member: usize,
) -> Result<(ModelParams, TrainingLog)> {
    config.validate()?;
    let mut log = TrainingLog::default();
    if config.iterations == 0 {
        return Ok((params, log));
    }
    let ys_all = source.require_labels()?;
    let yl_all = labeled.require_labels()?;
    if source.is_empty() || labeled.is_empty() || unlabeled.is_empty() {
        return Err(Error::Precondition("training needs nonempty source, labeled and unlabeled pools".into()));
    }
    for d in [labeled, unlabeled] {
        if d.dim() != source.dim() {
            return Err(Error::Dimension {
                context: "pool feature width",
                expected: source.dim(),
                actual: d.dim(),
            });
        }
    }
    let w = config.weights;
    let seed = member_seed(config, member);
    let mut batch_rng = rng_for(seed, &[tag::BATCH]);
    let mut center_rng = rng_for(seed, &[tag::CENTERS]);
    let mut sgd = Sgd::new(config.optimizer.clone());
    let n = config.optimizer.batch_size;
    let half = n / 2;
    let use_plan = w.alpha > 0.0 || w.lambda > 0.0;
    let use_centers = w.beta > 0.0;
    let uniform_a = uniform_marginal(n);
    let b = uniform_marginal(2 * half);
    let prior = match target_prior {
        Some(p) => p,
        None => positive_rate(yl_all),
    };
    let mut last_good = params.clone();

    for it in 0..config.iterations {
        let centers = if use_centers {
            Some(ClassCenters {
                source: pool_centers(&params, source, config.center_fraction, &mut center_rng)?,
                target: pool_centers(&params, labeled, config.center_fraction, &mut center_rng)?,
            })
        } else {
            None
        };
        let is = draw_batch(source.len(), n, &mut batch_rng);
        let il = draw_batch(labeled.len(), half, &mut batch_rng);
        let iu = draw_batch(unlabeled.len(), half, &mut batch_rng);
        let ys: Vec<u8> = is.iter().map(|&i| ys_all[i]).collect();
        let yl: Vec<u8> = il.iter().map(|&i| yl_all[i]).collect();
        let fs = forward(&params, source.features().select(Axis(0), &is).view())?;
        let fl = forward(&params, labeled.features().select(Axis(0), &il).view())?;
        let fu = forward(&params, unlabeled.features().select(Axis(0), &iu).view())?;
        if [&fs, &fl, &fu].iter().any(|c| c.probs.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFiniteLoss {
                term: "network output",
                iteration: it,
                last_good: Some(Box::new(last_good.clone())),
            });
        }
        let hs = fs.embeddings(&params);
        let hl = fl.embeddings(&params);
        let hu = fu.embeddings(&params);

        let mut comps = LossComponents::default();
        let mut g_hs = None;
        let mut g_hl = None;
        let mut g_hu = None;
        let mut g_pu = None;
        if use_plan {
            let ht = concatenate(Axis(0), &[hl, hu]).expect("equal widths");
            let cost = cost_matrix(hs, ht.view())?;
            let r = reweight_matrix(&ys, &yl, &fu.positive_probs())?;
            let mut eff = effective_cost(&cost, &r)?;
            if matches!(config.solver, SolverKind::Sinkhorn(_)) {
                let max = eff.fold(0.0f64, |m, &v| m.max(v));
                if max > 0.0 {
                    eff /= max;
                }
            }
            let a = match config.marginals {
                MarginalKind::Uniform => uniform_a.clone(),
                MarginalKind::ClassMatched => class_matched_marginal(&ys, &yl, half, prior),
            };
            let plan = config.solver.solve(eff.view(), a.view(), b.view())?.plan;
            if w.alpha > 0.0 {
                let al = alignment_loss(plan.view(), hs, ht.view(), w.alpha)?;
                comps.alignment = al.value;
                g_hs = Some(al.grad_source);
                g_hl = Some(al.grad_target.slice(s![..half, ..]).to_owned());
                g_hu = Some(al.grad_target.slice(s![half.., ..]).to_owned());
            }
            if w.lambda > 0.0 {
                let ge = group_entropy_loss(plan.slice(s![.., half..]), &ys, fu.probs.view(), config.group_normalization)?;
                comps.group_entropy = ge.value;
                g_pu = Some(ge.grad_unlabeled_probs * w.lambda);
            }
        }
        let cls = classification_loss(fs.probs.view(), &ys, fl.probs.view(), &yl, w.theta_s)?;
        comps.classification = cls.value;
        let g_ps = cls.grad_source_probs;
        let g_pl = cls.grad_target_probs;
        if let Some(centers) = &centers {
            let cc = centroid_loss(hs, &ys, hl, &yl, centers, config.center_margin)?;
            comps.centroid = cc.value;
            let gs = cc.grad_source * w.beta;
            let gl = cc.grad_target * w.beta;
            g_hs = Some(match g_hs {
                Some(g) => g + gs,
                None => gs,
            });
            g_hl = Some(match g_hl {
                Some(g) => g + gl,
                None => gl,
            });
        }
        let total = total_objective(&comps, &w).map_err(|e| match e {
            Error::NonFiniteLoss { term, .. } => Error::NonFiniteLoss {
                term,
                iteration: it,
                last_good: Some(Box::new(params.clone())),
            },
            e => e,
        })?;
        log.rows.push(LogRow {
            iteration: it,
            lot: comps.alignment + comps.classification,
            cls: comps.classification,
            group: comps.group_entropy,
            centroid: comps.centroid,
            total,
        });

        let mut grads = backward(&params, &fs, Some(g_ps.view()), g_hs.as_ref().map(|g| g.view()))?;
        add_into(&mut grads, &backward(&params, &fl, Some(g_pl.view()), g_hl.as_ref().map(|g| g.view()))?);
        if g_pu.is_some() || g_hu.is_some() {
            let zero = Array2::zeros(fu.probs.dim());
            let gp = g_pu.as_ref().unwrap_or(&zero);
            add_into(&mut grads, &backward(&params, &fu, Some(gp.view()), g_hu.as_ref().map(|g| g.view()))?);
        }
        last_good.clone_from(&params);
        sgd.step(&mut params, &grads).map_err(|e| match e {
            Error::Divergence(_) => Error::NonFiniteLoss {
                term: "gradient",
                iteration: it,
                last_good: Some(Box::new(last_good.clone())),
            },
            e => e,
        })?;
        debug_assert!(params.is_finite());
    }
    Ok((params, log))
}

pub fn positive_rate(labels: &[u8]) -> f64 {
    labels.iter().filter(|&&l| l == 1).count() as f64 / labels.len().max(1) as f64
}

/// Source marginal whose positive mass matches the target batch: the
/// labeled positives at `1/(2·half)` each plus `half` unlabeled samples at
/// rate `prior`. Falls back to uniform when the source batch is single-class.
pub fn class_matched_marginal(source_labels: &[u8], labeled_labels: &[u8], half: usize, prior: f64) -> Array1<f64> {
    let n = source_labels.len();
    let k = source_labels.iter().filter(|&&l| l == 1).count();
    if k == 0 || k == n {
        return uniform_marginal(n);
    }
    let n_t = (2 * half) as f64;
    let k_l = labeled_labels.iter().filter(|&&l| l == 1).count() as f64;
    let pos_mass = ((k_l + half as f64 * prior) / n_t).clamp(0.0, 1.0);
    let (wp, wn) = (pos_mass / k as f64, (1.0 - pos_mass) / (n - k) as f64);
    source_labels.iter().map(|&l| if l == 1 { wp } else { wn }).collect()
}

/// One member: initialize then run the alternating training.
pub fn fit_ssot_member(
    source: &TabularDataset,
    labeled: &TabularDataset,
    unlabeled: &TabularDataset,
    target_prior: Option<f64>,
    config: &TrainConfig,
    member: usize,
) -> Result<SsotModel> {
    let (params, init_status) = initialize_ssot(source, labeled, config, member)?;
    let (params, log) = train_ssot(params, source, labeled, unlabeled, target_prior, config, member)?;
    Ok(SsotModel {
        params,
        init_status,
        log,
        bins: Vec::new(),
    })
}

/// Self-paced ensemble around an arbitrary member trainer. Member 0 trains
/// on the full pools; member `i ≥ 1` trains on pools balanced by hardness
/// under the mean of members `0..i`, with `ω = tan(iπ / 2(n−1))` so the last
/// member samples each hardness bin uniformly. Absent pools are passed
/// through as `None`.
pub fn self_paced_ensemble<F>(
    source: Option<&TabularDataset>,
    labeled: Option<&TabularDataset>,
    config: &TrainConfig,
    mut train_member: F,
) -> Result<EnsembleModel>
where
    F: FnMut(usize, Option<&TabularDataset>, Option<&TabularDataset>, &[SsotModel]) -> Result<SsotModel>,
{
    config.validate()?;
    let n = config.sampler.n_members;
    for (pool, name) in [(source, "source pool"), (labeled, "labeled target pool")] {
        if let Some(p) = pool {
            if p.class_counts().is_none_or(|c| c.contains(&0)) {
                return Err(Error::DegeneratePool(format!("{name} must contain both classes")));
            }
        }
    }
    let mut members = vec![train_member(0, source, labeled, &[])?];
    for i in 1..n {
        let omega = self_paced_factor(i, n - 1)?;
        let mut rng = rng_for(config.seed, &[tag::SAMPLER, i as u64]);
        let current = MeanModel(members.iter().map(|m| &m.params).collect());
        let kind = config.sampler.kind;
        let k = config.sampler.n_bins;
        let mut bins = Vec::new();
        let mut balance = |pool: Option<&TabularDataset>, name: &str| -> Result<Option<TabularDataset>> {
            pool.map(|p| {
                let b = balance_pool(p, &current, kind, k, omega, &mut rng, name)?;
                bins.push(b.bins);
                Ok(b.data)
            })
            .transpose()
        };
        let s = match config.balance_source {
            true => balance(source, "source pool")?,
            false => source.cloned(),
        };
        let l = balance(labeled, "labeled target pool")?;
        let mut m = train_member(i, s.as_ref(), l.as_ref(), &members)?;
        m.bins = bins;
        members.push(m);
    }
    EnsembleModel::new(members)
}

/// The full method: a self-paced ensemble of alternating-trained members.
pub fn train_spssot(
    source: &TabularDataset,
    labeled: &TabularDataset,
    unlabeled: &TabularDataset,
    config: &TrainConfig,
) -> Result<EnsembleModel> {
    let prior = positive_rate(labeled.require_labels()?);
    self_paced_ensemble(Some(source), Some(labeled), config, |i, s, l, previous| {
        let (s, l) = (s.expect("source pool"), l.expect("labeled pool"));
        match (config.member_init, previous.first()) {
            (MemberInit::WarmStart, Some(first)) => {
                let (params, log) = train_ssot(first.params.clone(), s, l, unlabeled, Some(prior), config, i)?;
                Ok(SsotModel {
                    params,
                    init_status: first.init_status,
                    log,
                    bins: Vec::new(),
                })
            }
            _ => fit_ssot_member(s, l, unlabeled, Some(prior), config, i),
        }
    })
}
