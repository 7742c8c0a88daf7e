use ndarray::Array2;

use super::{impute_column_means, DomainTag, TabularDataset, MISSING};
use crate::{Error, Result};

pub const DEFAULT_WINDOW_HOURS: f64 = 6.0;
pub const DEFAULT_HORIZON_HOURS: f64 = 6.0;
/// Only the first 48 hours after ICU admission are used.
pub const MAX_STAY_HOURS: f64 = 48.0;

/// Per-indicator statistics, in feature order.
pub const STATISTICS: [&str; 5] = ["max", "min", "mean", "se", "latest"];

/// One patient's measurements over time.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecordSeries {
    pub patient_id: String,
    /// Hours since ICU admission, strictly ascending.
    pub timestamps: Vec<f64>,
    pub indicator_names: Vec<String>,
    /// One row per timestamp, one entry per indicator; `None` is missing.
    pub indicators: Vec<Vec<Option<f64>>>,
    pub demographic_names: Vec<String>,
    pub demographics: Vec<f64>,
    /// Per-timestamp sepsis onset markers, when known.
    pub sepsis_onset: Option<Vec<bool>>,
}

impl RawRecordSeries {
    fn validate(&self) -> Result<()> {
        if let Some(index) = self
            .timestamps
            .windows(2)
            .position(|w| !(w[1] > w[0]))
            .map(|i| i + 1)
        {
            return Err(Error::Ordering {
                patient_id: self.patient_id.clone(),
                index,
            });
        }
        if self.indicators.len() != self.timestamps.len() {
            return Err(Error::Dimension {
                context: "indicator rows",
                expected: self.timestamps.len(),
                actual: self.indicators.len(),
            });
        }
        if let Some(row) = self
            .indicators
            .iter()
            .find(|r| r.len() != self.indicator_names.len())
        {
            return Err(Error::Dimension {
                context: "indicator columns",
                expected: self.indicator_names.len(),
                actual: row.len(),
            });
        }
        if self.demographics.len() != self.demographic_names.len() {
            return Err(Error::Dimension {
                context: "demographics",
                expected: self.demographic_names.len(),
                actual: self.demographics.len(),
            });
        }
        if let Some(flags) = &self.sepsis_onset {
            if flags.len() != self.timestamps.len() {
                return Err(Error::Dimension {
                    context: "sepsis onset flags",
                    expected: self.timestamps.len(),
                    actual: flags.len(),
                });
            }
        }
        Ok(())
    }

    /// Names of the aggregated features produced by [`aggregate_windows`].
    pub fn feature_names(&self) -> Vec<String> {
        self.indicator_names
            .iter()
            .flat_map(|name| STATISTICS.iter().map(move |s| format!("{name}_{s}")))
            .chain(self.demographic_names.iter().cloned())
            .collect()
    }

    /// Fraction of missing indicator cells.
    pub fn missing_ratio(&self) -> f64 {
        let total = self.indicators.len() * self.indicator_names.len();
        if total == 0 {
            return 1.0;
        }
        let missing = self.indicators.iter().flatten().filter(|v| v.is_none()).count();
        missing as f64 / total as f64
    }
}

/// Patient-level screen applied before windowing: keep a patient only when
/// less than `max_missing_ratio` of their indicator cells are missing.
pub fn passes_missingness_filter(series: &RawRecordSeries, max_missing_ratio: f64) -> bool {
    series.missing_ratio() < max_missing_ratio
}

/// One aggregated window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub features: Vec<f64>,
    /// 1 when sepsis onset falls within the horizon after the window.
    pub label: Option<u8>,
}

#[derive(Default)]
struct Accumulator {
    count: usize,
    sum: f64,
    sum_sq: f64,
    max: f64,
    min: f64,
    latest: f64,
}

impl Accumulator {
    fn push(&mut self, v: f64) {
        if self.count == 0 {
            self.max = v;
            self.min = v;
        } else {
            self.max = self.max.max(v);
            self.min = self.min.min(v);
        }
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
        self.latest = v;
    }

    fn write(&self, out: &mut Vec<f64>) {
        if self.count == 0 {
            out.extend([MISSING; 5]);
            return;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        // standard error of the mean with the (n-1) sample variance
        let se = if self.count > 1 {
            let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        out.extend([self.max, self.min, mean, se, self.latest]);
    }
}

/// Aggregate a patient's series into non-overlapping windows aligned to
/// admission, `[k·w, (k+1)·w)`, restricted to the first 48 hours.
///
/// Windows are emitted from admission up to the last window that contains
/// a record and ends within 48 hours. Statistics skip missing values; an
/// indicator with no value in a window yields [`MISSING`] for all five
/// statistics. The label is 1 iff an onset flag falls in
/// `(window_end, window_end + horizon]`.
pub fn aggregate_windows(
    series: &RawRecordSeries,
    window_hours: f64,
    horizon_hours: f64,
) -> Result<Vec<WindowSample>> {
    if !(window_hours > 0.0) || !(horizon_hours > 0.0) {
        return Err(Error::Precondition(
            "window and horizon lengths must be positive".into(),
        ));
    }
    series.validate()?;
    let Some(last_in_stay) = series
        .timestamps
        .iter()
        .copied().rfind(|&t| t < MAX_STAY_HOURS)
    else {
        return Ok(Vec::new());
    };
    let max_windows = (MAX_STAY_HOURS / window_hours + 1e-9).floor() as usize;
    let n_windows = ((last_in_stay / window_hours).floor() as usize + 1).min(max_windows);

    let n_ind = series.indicator_names.len();
    let mut samples = Vec::with_capacity(n_windows);
    for k in 0..n_windows {
        let start = k as f64 * window_hours;
        let end = start + window_hours;
        let mut acc: Vec<Accumulator> = (0..n_ind).map(|_| Accumulator::default()).collect();
        for (t, row) in series.timestamps.iter().zip(&series.indicators) {
            if *t >= start && *t < end {
                for (a, v) in acc.iter_mut().zip(row) {
                    if let Some(v) = v {
                        a.push(*v);
                    }
                }
            }
        }
        let mut features = Vec::with_capacity(n_ind * STATISTICS.len() + series.demographics.len());
        for a in &acc {
            a.write(&mut features);
        }
        features.extend_from_slice(&series.demographics);
        let label = series.sepsis_onset.as_ref().map(|flags| {
            let hit = series
                .timestamps
                .iter()
                .zip(flags)
                .any(|(&t, &f)| f && t > end && t <= end + horizon_hours);
            u8::from(hit)
        });
        samples.push(WindowSample { features, label });
    }
    Ok(samples)
}

/// Stack window samples into a dataset, imputing missing cells with column
/// means.
pub fn windows_to_dataset(
    samples: &[WindowSample],
    feature_names: Vec<String>,
    domain: DomainTag,
) -> Result<TabularDataset> {
    let dim = feature_names.len();
    let mut x = Array2::zeros((samples.len(), dim));
    for (i, s) in samples.iter().enumerate() {
        if s.features.len() != dim {
            return Err(Error::Dimension {
                context: "window sample",
                expected: dim,
                actual: s.features.len(),
            });
        }
        for (j, v) in s.features.iter().enumerate() {
            x[[i, j]] = *v;
        }
    }
    impute_column_means(&mut x);
    let labels = if domain.is_labeled() {
        let labels: Option<Vec<u8>> = samples.iter().map(|s| s.label).collect();
        Some(labels.ok_or_else(|| Error::Validation(format!("{domain:?} windows need labels")))?)
    } else {
        None
    };
    TabularDataset::new(x, labels, domain, feature_names)
}
