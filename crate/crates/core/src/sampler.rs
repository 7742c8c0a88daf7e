//! Hardness-harmonized under-sampling of the majority class for the
//! self-paced ensemble.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::apportion::capped_largest_remainder;
use crate::data::TabularDataset;
use crate::nn::ProbabilityModel;
use crate::{Error, Result};

/// Self-paced factor used in place of `tan(π/2)`.
pub const OMEGA_MAX: f64 = 1e6;
const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardnessKind {
    AbsoluteError,
    #[default]
    SquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardnessConfig {
    pub kind: HardnessKind,
    pub n_bins: usize,
    /// Ensemble size, counting the initial member.
    pub n_members: usize,
}

impl Default for HardnessConfig {
    fn default() -> Self {
        Self {
            kind: HardnessKind::SquaredError,
            n_bins: 10,
            n_members: 5,
        }
    }
}

impl HardnessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins == 0 || self.n_members == 0 {
            return Err(Error::Validation(format!(
                "n_bins and n_members must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

pub fn hardness(probs: &[f64], labels: &[u8], kind: HardnessKind) -> Result<Vec<f64>> {
    if probs.len() != labels.len() {
        return Err(Error::Dimension {
            context: "hardness labels",
            expected: probs.len(),
            actual: labels.len(),
        });
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Precondition(format!("probability {p} outside [0,1]")));
    }
    Ok(probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let e = (p - f64::from(y)).abs();
            match kind {
                HardnessKind::AbsoluteError => e,
                HardnessKind::SquaredError => e * e,
            }
        })
        .collect())
}

/// `tan(iπ / 2n)` for `1 ≤ i ≤ n`, with `i = n` mapped to [`OMEGA_MAX`].
pub fn self_paced_factor(i: usize, n: usize) -> Result<f64> {
    if i == 0 || i > n {
        return Err(Error::Precondition(format!("member index {i} outside 1..={n}")));
    }
    if i == n {
        return Ok(OMEGA_MAX);
    }
    Ok((i as f64 * std::f64::consts::PI / (2.0 * n as f64)).tan().min(OMEGA_MAX))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub bin: usize,
    pub population: usize,
    /// Mean hardness of the bin, `NaN` when empty.
    pub mean_hardness: f64,
    /// Normalised sampling weight.
    pub weight: f64,
    pub quota: usize,
}

#[derive(Debug, Clone)]
pub struct Undersample {
    /// Indices into the majority set, ascending.
    pub indices: Vec<usize>,
    pub bins: Vec<BinStats>,
    pub omega: f64,
}

/// Equal-width bin of each value over `[min, max]`.
fn assign_bins(values: &[f64], k: usize) -> Vec<usize> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = hi - lo;
    values
        .iter()
        .map(|&v| {
            if width > 0.0 {
                (((v - lo) / width * k as f64) as usize).min(k - 1)
            } else {
                0
            }
        })
        .collect()
}

/// Draw `count` of the majority samples: `k` equal-width hardness bins,
/// bin `l` weighted by `1/(h_l + ω)`, quotas by capped largest remainder,
/// sampling without replacement inside each bin.
pub fn harmonized_undersample(
    hardness: &[f64],
    count: usize,
    n_bins: usize,
    omega: f64,
    rng: &mut impl Rng,
) -> Result<Undersample> {
    if n_bins == 0 {
        return Err(Error::Validation("n_bins must be positive".into()));
    }
    if !(omega >= 0.0) {
        return Err(Error::Precondition(format!("self-paced factor {omega} is negative")));
    }
    if count == 0 || hardness.is_empty() {
        return Err(Error::Precondition("under-sampling needs a nonempty majority and a positive count".into()));
    }
    if count > hardness.len() {
        return Err(Error::SamplingInfeasible {
            requested: count,
            available: hardness.len(),
        });
    }
    let assignment = assign_bins(hardness, n_bins);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_bins];
    for (i, &b) in assignment.iter().enumerate() {
        members[b].push(i);
    }
    let means: Vec<f64> = members
        .iter()
        .map(|m| {
            if m.is_empty() {
                f64::NAN
            } else {
                m.iter().map(|&i| hardness[i]).sum::<f64>() / m.len() as f64
            }
        })
        .collect();
    let raw: Vec<f64> = means
        .iter()
        .map(|&h| if h.is_nan() { 0.0 } else { 1.0 / (h + omega).max(WEIGHT_FLOOR) })
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let caps: Vec<usize> = members.iter().map(Vec::len).collect();
    let quotas = capped_largest_remainder(count, &weights, &caps).ok_or(Error::SamplingInfeasible {
        requested: count,
        available: hardness.len(),
    })?;

    let mut indices = Vec::with_capacity(count);
    for (m, &q) in members.iter_mut().zip(&quotas) {
        if q > 0 {
            let (chosen, _) = m.partial_shuffle(rng, q);
            indices.extend_from_slice(chosen);
        }
    }
    indices.sort_unstable();
    let bins = (0..n_bins)
        .map(|l| BinStats {
            bin: l,
            population: caps[l],
            mean_hardness: means[l],
            weight: weights[l],
            quota: quotas[l],
        })
        .collect();
    Ok(Undersample { indices, bins, omega })
}

/// Tab-separated per-bin diagnostics with a header row.
pub fn bin_stats_tsv(bins: &[BinStats]) -> String {
    let mut out = String::from("bin\tpopulation\tmean_hardness\tweight\tquota\n");
    for b in bins {
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", b.bin, b.population, b.mean_hardness, b.weight, b.quota);
    }
    out
}

/// Minority class of a labeled pool, by count (ties resolve to class 1).
fn minority_class(labels: &[u8], context: &str) -> Result<(u8, [usize; 2])> {
    let mut counts = [0usize; 2];
    for &l in labels {
        counts[l as usize] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::DegeneratePool(format!(
            "{context} has class counts {counts:?}; both classes are required"
        )));
    }
    Ok((u8::from(counts[1] <= counts[0]), counts))
}

#[derive(Debug, Clone)]
pub struct BalancedPool {
    pub data: TabularDataset,
    pub bins: Vec<BinStats>,
}

/// All minority samples plus a harmonized under-sample of the majority,
/// with hardness scored by `model`.
pub fn balance_pool(
    pool: &TabularDataset,
    model: &dyn ProbabilityModel,
    kind: HardnessKind,
    n_bins: usize,
    omega: f64,
    rng: &mut impl Rng,
    context: &str,
) -> Result<BalancedPool> {
    let labels = pool.require_labels()?;
    let (minority, counts) = minority_class(labels, context)?;
    let majority_idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != minority).collect();
    let minority_idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == minority).collect();
    let majority = pool.select(&majority_idx);
    let probs = model.predict_positive(majority.features())?;
    let majority_labels = majority.require_labels()?;
    let h = hardness(&probs, majority_labels, kind)?;
    let draw = harmonized_undersample(&h, counts[minority as usize], n_bins, omega, rng)?;
    let mut keep: Vec<usize> = minority_idx;
    keep.extend(draw.indices.iter().map(|&i| majority_idx[i]));
    keep.sort_unstable();
    Ok(BalancedPool {
        data: pool.select(&keep),
        bins: draw.bins,
    })
}

/// Balanced versions of the source and labeled-target pools for one
/// ensemble member.
pub fn build_balanced_pools(
    source: &TabularDataset,
    labeled: &TabularDataset,
    model: &dyn ProbabilityModel,
    kind: HardnessKind,
    n_bins: usize,
    omega: f64,
    rng: &mut impl Rng,
) -> Result<(BalancedPool, BalancedPool)> {
    let s = balance_pool(source, model, kind, n_bins, omega, rng, "source pool")?;
    let l = balance_pool(labeled, model, kind, n_bins, omega, rng, "labeled target pool")?;
    Ok((s, l))
}
