//! Terms of the training objective and their gradients with respect to the
//! network outputs (class probabilities) and embeddings.
//!
//! The coupling and the class centers enter every term as constants: they
//! are computed before the gradient step and held fixed during it.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::apportion::largest_remainder;
use crate::{Error, Result};

/// Floor applied inside every logarithm.
pub const LOG_FLOOR: f64 = 1e-12;
/// Default cap on each between-center squared distance.
pub const DEFAULT_CENTER_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Transport alignment weight.
    pub alpha: f64,
    /// Source cross-entropy weight.
    pub theta_s: f64,
    /// Centroid loss weight.
    pub beta: f64,
    /// Group entropic loss weight.
    pub lambda: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            theta_s: 1.0,
            beta: 0.15,
            lambda: 0.5,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if [self.alpha, self.theta_s, self.beta, self.lambda]
            .iter()
            .any(|w| !(*w >= 0.0) || !w.is_finite())
        {
            return Err(Error::Validation(format!("loss weights must be nonnegative: {self:?}")));
        }
        Ok(())
    }
}

/// How the group entropic loss is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupNormalization {
    /// Divide by the plan mass on the unlabeled block: the expected
    /// cross-entropy under the plan.
    #[default]
    PlanMass,
    /// Divide by `n_s · n_u`.
    Strict,
}

fn check_rows(a: usize, b: usize, context: &'static str) -> Result<()> {
    if a != b {
        return Err(Error::Dimension {
            context,
            expected: a,
            actual: b,
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AlignmentLoss {
    pub value: f64,
    pub grad_source: Array2<f64>,
    pub grad_target: Array2<f64>,
}

/// `α Σ_ij γ_ij ‖h^s_i − h^t_j‖²`.
pub fn alignment_loss(
    plan: ArrayView2<'_, f64>,
    source: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    alpha: f64,
) -> Result<AlignmentLoss> {
    check_rows(source.nrows(), plan.nrows(), "alignment coupling rows")?;
    check_rows(target.nrows(), plan.ncols(), "alignment coupling columns")?;
    check_rows(source.ncols(), target.ncols(), "alignment embedding width")?;
    let row_mass = plan.sum_axis(Axis(1));
    let col_mass = plan.sum_axis(Axis(0));
    let plan_t = plan.dot(&target); // Σ_j γ_ij h^t_j
    let plan_s = plan.t().dot(&source); // Σ_i γ_ij h^s_i

    let mut value = 0.0;
    let mut grad_source = Array2::zeros(source.dim());
    for (i, (mut g, (h, pt))) in grad_source
        .outer_iter_mut()
        .zip(source.outer_iter().zip(plan_t.outer_iter()))
        .enumerate()
    {
        let r = row_mass[i];
        value += r * h.dot(&h) - 2.0 * h.dot(&pt);
        g.assign(&((&h * r - pt) * (2.0 * alpha)));
    }
    let mut grad_target = Array2::zeros(target.dim());
    for (j, (mut g, (h, ps))) in grad_target
        .outer_iter_mut()
        .zip(target.outer_iter().zip(plan_s.outer_iter()))
        .enumerate()
    {
        let c = col_mass[j];
        value += c * h.dot(&h);
        g.assign(&((&h * c - ps) * (2.0 * alpha)));
    }
    Ok(AlignmentLoss {
        value: alpha * value.max(0.0),
        grad_source,
        grad_target,
    })
}

#[derive(Debug, Clone)]
pub struct ClassificationLoss {
    pub value: f64,
    pub grad_source_probs: Array2<f64>,
    pub grad_target_probs: Array2<f64>,
}

/// Mean cross-entropy and its gradient w.r.t. the probabilities, each
/// scaled by `weight`.
fn cross_entropy(probs: ArrayView2<'_, f64>, labels: &[u8], weight: f64) -> Result<(f64, Array2<f64>)> {
    check_rows(probs.nrows(), labels.len(), "cross-entropy labels")?;
    let mut grad = Array2::zeros(probs.dim());
    if labels.is_empty() {
        return Ok((0.0, grad));
    }
    let n = labels.len() as f64;
    let mut value = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let p = probs[[i, y as usize]];
        value -= p.max(LOG_FLOOR).ln();
        if p > LOG_FLOOR {
            grad[[i, y as usize]] = -weight / (n * p);
        }
    }
    Ok((weight * value / n, grad))
}

/// `θ_s · CE(source) + CE(labeled target)`, each averaged over its batch.
pub fn classification_loss(
    source_probs: ArrayView2<'_, f64>,
    source_labels: &[u8],
    target_probs: ArrayView2<'_, f64>,
    target_labels: &[u8],
    theta_s: f64,
) -> Result<ClassificationLoss> {
    let (vs, gs) = cross_entropy(source_probs, source_labels, theta_s)?;
    let (vt, gt) = cross_entropy(target_probs, target_labels, 1.0)?;
    Ok(ClassificationLoss {
        value: vs + vt,
        grad_source_probs: gs,
        grad_target_probs: gt,
    })
}

#[derive(Debug, Clone)]
pub struct GroupEntropyLoss {
    pub value: f64,
    pub grad_unlabeled_probs: Array2<f64>,
}

/// Cross-entropy between unlabeled predictions and the labels of the source
/// samples the plan couples them with:
/// `−(1/Z) Σ_ij γ_ij log ŷ_j[y^s_i]`.
pub fn group_entropy_loss(
    plan_block: ArrayView2<'_, f64>,
    source_labels: &[u8],
    unlabeled_probs: ArrayView2<'_, f64>,
    normalization: GroupNormalization,
) -> Result<GroupEntropyLoss> {
    check_rows(source_labels.len(), plan_block.nrows(), "group entropy coupling rows")?;
    check_rows(unlabeled_probs.nrows(), plan_block.ncols(), "group entropy coupling columns")?;
    let mut grad = Array2::zeros(unlabeled_probs.dim());
    let z = match normalization {
        GroupNormalization::PlanMass => plan_block.sum(),
        GroupNormalization::Strict => (plan_block.nrows() * plan_block.ncols()) as f64,
    };
    if !(z > 0.0) {
        return Ok(GroupEntropyLoss {
            value: 0.0,
            grad_unlabeled_probs: grad,
        });
    }
    // mass each unlabeled column receives from each source class
    let mut class_mass = Array2::<f64>::zeros((plan_block.ncols(), 2));
    for (row, &y) in plan_block.outer_iter().zip(source_labels) {
        let mut col = class_mass.column_mut(y as usize);
        col += &row;
    }
    let mut value = 0.0;
    for j in 0..plan_block.ncols() {
        for k in 0..2 {
            let m = class_mass[[j, k]];
            if m == 0.0 {
                continue;
            }
            let p = unlabeled_probs[[j, k]];
            value -= m * p.max(LOG_FLOOR).ln();
            if p > LOG_FLOOR {
                grad[[j, k]] = -m / (z * p);
            }
        }
    }
    Ok(GroupEntropyLoss {
        value: value / z,
        grad_unlabeled_probs: grad,
    })
}

/// Per-class mean embeddings of one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainCenters {
    pub c0: Array1<f64>,
    pub c1: Array1<f64>,
}

impl DomainCenters {
    pub fn get(&self, class: u8) -> ArrayView1<'_, f64> {
        if class == 0 {
            self.c0.view()
        } else {
            self.c1.view()
        }
    }

    pub fn separation_sq(&self) -> f64 {
        let d = &self.c0 - &self.c1;
        d.dot(&d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassCenters {
    pub source: DomainCenters,
    pub target: DomainCenters,
}

/// Random subset of `round(fraction·n)` indices (at least one per class),
/// shared across classes by largest remainder so each class present in the
/// pool is represented.
pub fn center_subsample(labels: &[u8], fraction: f64, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Precondition(format!("subsample fraction {fraction} outside (0,1]")));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l as usize].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::DegenerateClass {
                class: class as u8,
                context: "center estimation pool".into(),
            });
        }
    }
    let total = ((labels.len() as f64 * fraction).round() as usize).max(2);
    let counts = [by_class[0].len() as f64, by_class[1].len() as f64];
    let mut quota = largest_remainder(total, &counts);
    for k in 0..2 {
        if quota[k] == 0 {
            quota[k] = 1;
            quota[1 - k] -= 1;
        }
    }
    let mut out = Vec::with_capacity(total);
    for (members, &q) in by_class.iter_mut().zip(&quota) {
        members.shuffle(rng);
        out.extend_from_slice(&members[..q.min(members.len())]);
    }
    out.sort_unstable();
    Ok(out)
}

/// Class means of `embeddings`.
pub fn mean_centers(embeddings: ArrayView2<'_, f64>, labels: &[u8]) -> Result<DomainCenters> {
    check_rows(embeddings.nrows(), labels.len(), "center labels")?;
    let dim = embeddings.ncols();
    let mut sums = [Array1::<f64>::zeros(dim), Array1::<f64>::zeros(dim)];
    let mut counts = [0usize; 2];
    for (h, &y) in embeddings.outer_iter().zip(labels) {
        sums[y as usize] += &h;
        counts[y as usize] += 1;
    }
    for (class, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(Error::DegenerateClass {
                class: class as u8,
                context: "center estimation subsample".into(),
            });
        }
    }
    let [s0, s1] = sums;
    Ok(DomainCenters {
        c0: s0 / counts[0] as f64,
        c1: s1 / counts[1] as f64,
    })
}

/// Centers from a random `fraction` of the samples of one domain.
pub fn class_centers(
    embeddings: ArrayView2<'_, f64>,
    labels: &[u8],
    fraction: f64,
    rng: &mut impl Rng,
) -> Result<DomainCenters> {
    check_rows(embeddings.nrows(), labels.len(), "center labels")?;
    let idx = center_subsample(labels, fraction, rng)?;
    let sub = embeddings.select(Axis(0), &idx);
    let sub_labels: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
    mean_centers(sub.view(), &sub_labels)
}

#[derive(Debug, Clone)]
pub struct CentroidLoss {
    pub value: f64,
    pub grad_source: Array2<f64>,
    pub grad_target: Array2<f64>,
}

fn domain_centroid(
    h: ArrayView2<'_, f64>,
    labels: &[u8],
    centers: &DomainCenters,
    margin: f64,
) -> Result<(f64, Array2<f64>)> {
    check_rows(h.nrows(), labels.len(), "centroid labels")?;
    check_rows(centers.c0.len(), h.ncols(), "centroid width")?;
    let mut grad = Array2::zeros(h.dim());
    let mut pull = 0.0;
    if !labels.is_empty() {
        let n = labels.len() as f64;
        for ((row, mut g), &y) in h.outer_iter().zip(grad.outer_iter_mut()).zip(labels) {
            let d = &row - &centers.get(y);
            pull += d.dot(&d);
            g.assign(&(d * (2.0 / n)));
        }
        pull /= n;
    }
    Ok((pull - centers.separation_sq().min(margin), grad))
}

/// Pull each labeled embedding to its class center and push the two class
/// centers apart, in both domains. The push term is capped at `margin`.
pub fn centroid_loss(
    source: ArrayView2<'_, f64>,
    source_labels: &[u8],
    target: ArrayView2<'_, f64>,
    target_labels: &[u8],
    centers: &ClassCenters,
    margin: f64,
) -> Result<CentroidLoss> {
    if centers.source.c0.iter().chain(&centers.source.c1).chain(&centers.target.c0).chain(&centers.target.c1).any(|v| !v.is_finite()) {
        return Err(Error::Validation("class centers must be finite".into()));
    }
    let (vs, gs) = domain_centroid(source, source_labels, &centers.source, margin)?;
    let (vt, gt) = domain_centroid(target, target_labels, &centers.target, margin)?;
    Ok(CentroidLoss {
        value: vs + vt,
        grad_source: gs,
        grad_target: gt,
    })
}

/// Unweighted values of the four terms on one batch (alignment already
/// carries α and classification θ_s).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub alignment: f64,
    pub classification: f64,
    pub group_entropy: f64,
    pub centroid: f64,
}

/// `L = (alignment + classification) + λ·group + β·centroid`.
pub fn total_objective(c: &LossComponents, weights: &LossWeights) -> Result<f64> {
    for (term, v) in [
        ("alignment", c.alignment),
        ("classification", c.classification),
        ("group_entropy", c.group_entropy),
        ("centroid", c.centroid),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFiniteLoss {
                term,
                iteration: 0,
                last_good: None,
            });
        }
    }
    Ok(c.alignment + c.classification + weights.lambda * c.group_entropy + weights.beta * c.centroid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn alignment_examples() {
        let h = array![[1.0, 2.0], [3.0, -1.0]];
        let plan = array![[0.5, 0.0], [0.0, 0.5]];
        let l = alignment_loss(plan.view(), h.view(), h.view(), 0.05).unwrap();
        assert!(l.value.abs() < 1e-15);
        let l = alignment_loss(array![[1.0]].view(), array![[0.0]].view(), array![[2.0]].view(), 0.05).unwrap();
        assert!((l.value - 0.2).abs() < 1e-15);
        assert!((l.grad_source[[0, 0]] - 0.05 * 2.0 * (0.0 - 2.0)).abs() < 1e-15);
        assert!(alignment_loss(plan.view(), h.view(), array![[1.0]].view(), 1.0).is_err());
    }

    #[test]
    fn classification_examples() {
        let perfect = array![[0.0, 1.0]];
        let l = classification_loss(perfect.view(), &[1], Array2::zeros((0, 2)).view(), &[], 1.0).unwrap();
        assert_eq!(l.value, 0.0);
        let half = array![[0.5, 0.5]];
        let l = classification_loss(half.view(), &[1], Array2::zeros((0, 2)).view(), &[], 1.0).unwrap();
        assert!((l.value - 2f64.ln()).abs() < 1e-15);
        let l = classification_loss(half.view(), &[1], perfect.view(), &[1], 0.0).unwrap();
        assert_eq!(l.value, 0.0);
        assert!(l.grad_source_probs.iter().all(|&g| g == 0.0));
        // zero probability at the true class is floored, never NaN
        let l = classification_loss(array![[1.0, 0.0]].view(), &[1], Array2::zeros((0, 2)).view(), &[], 1.0).unwrap();
        assert!((l.value + LOG_FLOOR.ln()).abs() < 1e-9);
        assert!(l.grad_source_probs.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn group_entropy_examples() {
        let probs = array![[0.5, 0.5]];
        let zero = group_entropy_loss(array![[0.0]].view(), &[1], probs.view(), GroupNormalization::PlanMass).unwrap();
        assert_eq!(zero.value, 0.0);
        for mode in [GroupNormalization::PlanMass, GroupNormalization::Strict] {
            let l = group_entropy_loss(array![[1.0]].view(), &[1], probs.view(), mode).unwrap();
            assert!((l.value - 2f64.ln()).abs() < 1e-15);
        }
        let confident = array![[0.0, 1.0], [1.0, 0.0]];
        let plan = array![[0.3, 0.0], [0.0, 0.2]];
        let l = group_entropy_loss(plan.view(), &[1, 0], confident.view(), GroupNormalization::PlanMass).unwrap();
        assert_eq!(l.value, 0.0);
    }

    #[test]
    fn plan_mass_normalization_rescales_strict() {
        let plan = array![[0.1, 0.05], [0.02, 0.03]];
        let probs = array![[0.3, 0.7], [0.6, 0.4]];
        let a = group_entropy_loss(plan.view(), &[0, 1], probs.view(), GroupNormalization::PlanMass).unwrap();
        let b = group_entropy_loss(plan.view(), &[0, 1], probs.view(), GroupNormalization::Strict).unwrap();
        assert!((a.value * plan.sum() - b.value * 4.0).abs() < 1e-15);
    }

    #[test]
    fn center_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = array![[1.0, 1.0], [3.0, 3.0], [7.0, 0.0]];
        let c = class_centers(h.view(), &[0, 0, 1], 1.0, &mut rng).unwrap();
        assert_eq!(c.c0, array![2.0, 2.0]);
        assert_eq!(c.c1, array![7.0, 0.0]);
        let h = array![[1.0], [4.0]];
        let c = class_centers(h.view(), &[0, 1], 1.0, &mut rng).unwrap();
        assert_eq!((c.c0[0], c.c1[0]), (1.0, 4.0));
    }

    #[test]
    fn half_subsample_is_exact_and_covers_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i % 10 == 0)).collect();
        for _ in 0..50 {
            let idx = center_subsample(&labels, 0.5, &mut rng).unwrap();
            assert_eq!(idx.len(), 50);
            assert!(idx.iter().any(|&i| labels[i] == 1));
        }
        // a pool of 10 with one positive still yields it every time
        let labels: Vec<u8> = (0..10).map(|i| u8::from(i == 3)).collect();
        let idx = center_subsample(&labels, 0.5, &mut rng).unwrap();
        assert_eq!(idx.len(), 5);
        assert!(idx.contains(&3));
        assert!(matches!(
            center_subsample(&[0, 0, 0], 0.5, &mut rng),
            Err(Error::DegenerateClass { class: 1, .. })
        ));
    }

    #[test]
    fn centroid_examples() {
        let centers = ClassCenters {
            source: DomainCenters { c0: array![0.0], c1: array![1.0] },
            target: DomainCenters { c0: array![5.0], c1: array![6.0] },
        };
        let l = centroid_loss(
            array![[0.0], [1.0]].view(),
            &[0, 1],
            array![[5.0], [6.0]].view(),
            &[0, 1],
            &centers,
            DEFAULT_CENTER_MARGIN,
        )
        .unwrap();
        assert!((l.value + 2.0).abs() < 1e-15);
        let same = ClassCenters {
            source: DomainCenters { c0: array![2.0], c1: array![2.0] },
            target: DomainCenters { c0: array![2.0], c1: array![2.0] },
        };
        let l = centroid_loss(array![[2.0]].view(), &[1], array![[2.0]].view(), &[0], &same, 10.0).unwrap();
        assert_eq!(l.value, 0.0);
        // separation beyond the margin is capped
        let far = ClassCenters {
            source: DomainCenters { c0: array![0.0], c1: array![100.0] },
            target: DomainCenters { c0: array![0.0], c1: array![1.0] },
        };
        let l = centroid_loss(array![[0.0]].view(), &[0], array![[0.0]].view(), &[0], &far, 10.0).unwrap();
        assert!((l.value + 11.0).abs() < 1e-12);
    }

    #[test]
    fn total_objective_sums_and_validates() {
        let w = LossWeights::default();
        let c = LossComponents { alignment: 0.2, classification: 0.7, group_entropy: 0.4, centroid: -1.0 };
        assert!((total_objective(&c, &w).unwrap() - (0.2 + 0.7 + 0.5 * 0.4 - 0.15)).abs() < 1e-15);
        assert_eq!(total_objective(&LossComponents::default(), &w).unwrap(), 0.0);
        let none = LossWeights { beta: 0.0, lambda: 0.0, ..w };
        assert_eq!(total_objective(&c, &none).unwrap(), 0.2 + 0.7);
        let bad = LossComponents { group_entropy: f64::NAN, ..c };
        assert!(matches!(
            total_objective(&bad, &w),
            Err(Error::NonFiniteLoss { term: "group_entropy", .. })
        ));
    }
}
