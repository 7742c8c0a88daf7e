use rand::seq::SliceRandom;

use super::{DomainTag, TabularDataset};
use crate::apportion::largest_remainder;
use crate::rng::{rng_for, tag};
use crate::{Error, Result};

/// True labels of the unlabeled pool. Training code has no way to read
/// them; only evaluation diagnostics inside the crate can.
#[derive(Debug, Clone, PartialEq)]
pub struct SealedLabels(Vec<u8>);

impl SealedLabels {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[cfg(test)]
    pub(crate) fn reveal(&self) -> &[u8] {
        &self.0
    }
}

/// Labeled / unlabeled / test partition of the target domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSplit {
    pub labeled: TabularDataset,
    pub unlabeled: TabularDataset,
    pub test: TabularDataset,
    pub unlabeled_sealed: SealedLabels,
}

/// Stratified split of a labeled target dataset.
///
/// Split sizes are `round(n·labeled_fraction)` and `round(n·test_fraction)`
/// with the remainder unlabeled; each size is shared out across classes by
/// largest remainder so every split keeps the global positive rate to within
/// one sample per class.
pub fn split_target(
    target: &TabularDataset,
    labeled_fraction: f64,
    test_fraction: f64,
    seed: u64,
) -> Result<TargetSplit> {
    if !(labeled_fraction > 0.0 && labeled_fraction < 1.0)
        || !(test_fraction > 0.0 && test_fraction < 1.0)
        || labeled_fraction + test_fraction >= 1.0
    {
        return Err(Error::Precondition(format!(
            "split fractions {labeled_fraction} + {test_fraction} must be in (0,1) and sum below 1"
        )));
    }
    let labels = target.require_labels()?;
    let n = labels.len();
    let n_labeled = (n as f64 * labeled_fraction).round() as usize;
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_labeled + n_test > n {
        return Err(Error::Precondition("split sizes exceed dataset".into()));
    }

    let mut rng = rng_for(seed, &[tag::SPLIT]);
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l as usize].push(i);
    }
    let counts = [by_class[0].len() as f64, by_class[1].len() as f64];
    let labeled_q = largest_remainder(n_labeled, &counts);
    let test_q = largest_remainder(n_test, &counts);

    let (mut li, mut ui, mut ti) = (Vec::new(), Vec::new(), Vec::new());
    for (class, idx) in by_class.iter_mut().enumerate() {
        idx.shuffle(&mut rng);
        let (l, t) = (labeled_q[class], test_q[class]);
        li.extend_from_slice(&idx[..l]);
        ti.extend_from_slice(&idx[l..l + t]);
        ui.extend_from_slice(&idx[l + t..]);
    }
    for (name, part) in [("labeled", &li), ("test", &ti)] {
        for class in [0u8, 1] {
            if !part.iter().any(|&i| labels[i] == class) {
                return Err(Error::Stratification(format!(
                    "{name} split received no samples of class {class}; enlarge the fraction or dataset"
                )));
            }
        }
    }
    li.shuffle(&mut rng);
    ui.shuffle(&mut rng);
    ti.shuffle(&mut rng);

    let labeled = target.select(&li).with_domain(DomainTag::TargetLabeled)?;
    let test = target.select(&ti).with_domain(DomainTag::TargetTest)?;
    let (unlabeled, sealed) = target.select(&ui).into_unlabeled();
    Ok(TargetSplit {
        labeled,
        unlabeled,
        test,
        unlabeled_sealed: SealedLabels(sealed.unwrap_or_default()),
    })
}
