//! Tabular datasets, clinical window aggregation, CSV ingestion, the
//! synthetic two-domain generator and stratified target splits.

mod csv_io;
mod split;
mod synthetic;
mod window;

pub use csv_io::{load_csv, write_csv, CsvSchema};
pub use split::{split_target, SealedLabels, TargetSplit};
pub use synthetic::{generate_synthetic, SyntheticSpec};
pub use window::{
    aggregate_windows, passes_missingness_filter, windows_to_dataset, RawRecordSeries,
    WindowSample, DEFAULT_HORIZON_HOURS, DEFAULT_WINDOW_HOURS, MAX_STAY_HOURS, STATISTICS,
};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Marker for a missing measurement inside aggregated feature vectors.
pub const MISSING: f64 = f64::NAN;

pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    Source,
    TargetLabeled,
    TargetUnlabeled,
    TargetTest,
}

impl DomainTag {
    pub fn is_labeled(self) -> bool {
        !matches!(self, DomainTag::TargetUnlabeled)
    }
}

/// Feature matrix (one row per sample) with optional binary labels.
///
/// Unlabeled target data never carries labels; every other domain always
/// does. Instances are immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    features: Array2<f64>,
    labels: Option<Vec<u8>>,
    domain: DomainTag,
    feature_names: Vec<String>,
}

impl TabularDataset {
    pub fn new(
        features: Array2<f64>,
        labels: Option<Vec<u8>>,
        domain: DomainTag,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if feature_names.len() != features.ncols() {
            return Err(Error::Dimension {
                context: "feature names",
                expected: features.ncols(),
                actual: feature_names.len(),
            });
        }
        match (&labels, domain.is_labeled()) {
            (Some(_), false) => {
                return Err(Error::Validation(
                    "unlabeled target data must not carry labels".into(),
                ))
            }
            (None, true) => {
                return Err(Error::Validation(format!("{domain:?} data requires labels")))
            }
            _ => {}
        }
        if let Some(labels) = &labels {
            if labels.len() != features.nrows() {
                return Err(Error::Dimension {
                    context: "labels",
                    expected: features.nrows(),
                    actual: labels.len(),
                });
            }
            if let Some(bad) = labels.iter().find(|&&l| l > 1) {
                return Err(Error::Validation(format!("label {bad} outside {{0,1}}")));
            }
        }
        Ok(Self {
            features,
            labels,
            domain,
            feature_names,
        })
    }

    /// Default feature names `f0, f1, ...`.
    pub fn default_names(dim: usize) -> Vec<String> {
        (0..dim).map(|i| format!("f{i}")).collect()
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    /// Labels, or a validation error for unlabeled data.
    pub fn require_labels(&self) -> Result<&[u8]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::Validation(format!("{:?} data has no labels", self.domain)))
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn samples(&self) -> impl Iterator<Item = WindowSample> + '_ {
        self.features
            .outer_iter()
            .enumerate()
            .map(|(i, row)| WindowSample {
                features: row.to_vec(),
                label: self.labels.as_ref().map(|l| l[i]),
            })
    }

    /// `[negatives, positives]`.
    pub fn class_counts(&self) -> Option<[usize; 2]> {
        self.labels.as_ref().map(|labels| {
            let pos = labels.iter().filter(|&&l| l == 1).count();
            [labels.len() - pos, pos]
        })
    }

    /// Rows at `indices` (duplicates allowed), same domain.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            domain: self.domain,
            feature_names: self.feature_names.clone(),
        }
    }

    /// Same samples under a different domain tag. Dropping labels is the
    /// caller's job; retagging labeled data as unlabeled is rejected.
    pub fn with_domain(self, domain: DomainTag) -> Result<Self> {
        Self::new(self.features, self.labels, domain, self.feature_names)
    }

    /// Strip labels, returning them alongside an unlabeled dataset.
    pub fn into_unlabeled(self) -> (Self, Option<Vec<u8>>) {
        let labels = self.labels;
        (
            Self {
                features: self.features,
                labels: None,
                domain: DomainTag::TargetUnlabeled,
                feature_names: self.feature_names,
            },
            labels,
        )
    }

    /// Row-wise concatenation of labeled datasets; the result takes `domain`.
    pub fn concat(parts: &[&TabularDataset], domain: DomainTag) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Validation("cannot concatenate zero datasets".into()))?;
        let views: Vec<_> = parts.iter().map(|d| d.features.view()).collect();
        let features = ndarray::concatenate(Axis(0), &views).map_err(|_| Error::Dimension {
            context: "concatenate",
            expected: first.dim(),
            actual: parts.iter().map(|d| d.dim()).find(|&d| d != first.dim()).unwrap_or(0),
        })?;
        let labels = if domain.is_labeled() {
            let mut all = Vec::with_capacity(features.nrows());
            for part in parts {
                all.extend_from_slice(part.require_labels()?);
            }
            Some(all)
        } else {
            None
        };
        Self::new(features, labels, domain, first.feature_names.clone())
    }

    pub(crate) fn map_features(&self, f: impl FnOnce(ArrayView2<'_, f64>) -> Array2<f64>) -> Self {
        Self {
            features: f(self.features.view()),
            labels: self.labels.clone(),
            domain: self.domain,
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Replace [`MISSING`] entries by the mean of the observed values in their
/// column. Columns with no observed value become 0.
pub fn impute_column_means(features: &mut Array2<f64>) {
    for mut col in features.axis_iter_mut(Axis(1)) {
        let (sum, count) = col
            .iter()
            .filter(|v| !is_missing(**v))
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        let mean = if count > 0 { sum / count as f64 } else { 0.0 };
        col.mapv_inplace(|v| if is_missing(v) { mean } else { v });
    }
}

/// Per-feature z-scoring. Fitted on the source domain and applied to every
/// domain so target statistics never leak into the transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &TabularDataset) -> Self {
        let x = data.features();
        let n = x.nrows().max(1) as f64;
        let mean: Array1<f64> = x.sum_axis(Axis(0)) / n;
        let std = x
            .axis_iter(Axis(1))
            .zip(mean.iter())
            .map(|(col, m)| {
                let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
                let s = var.sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self {
            mean: mean.to_vec(),
            std,
        }
    }

    pub fn transform(&self, data: &TabularDataset) -> Result<TabularDataset> {
        if data.dim() != self.mean.len() {
            return Err(Error::Dimension {
                context: "standardizer",
                expected: self.mean.len(),
                actual: data.dim(),
            });
        }
        Ok(data.map_features(|x| {
            let mut out = x.to_owned();
            for (mut col, (m, s)) in out
                .axis_iter_mut(Axis(1))
                .zip(self.mean.iter().zip(&self.std))
            {
                col.mapv_inplace(|v| (v - m) / s);
            }
            out
        }))
    }
}
