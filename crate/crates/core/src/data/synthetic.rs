use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DomainTag, TabularDataset};
use crate::rng::{rng_for, tag};
use crate::{Error, Result};

/// Two-domain covariate-shift generator settings.
///
/// Each class is a Gaussian blob: class 0 centred at the origin, class 1 at
/// `class_separation` along axis 0. Noise is isotropic with scale
/// `noise_sigma`, except axis 1 which is stretched by `anisotropy`. The
/// target domain draws from the same class-conditionals (with its own class
/// prior), then rotates the (axis 0, axis 1) plane by
/// `shift_rotation_angle` and adds `shift_translation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub feature_dim: usize,
    pub minority_fraction_source: f64,
    pub minority_fraction_target: f64,
    /// Radians.
    pub shift_rotation_angle: f64,
    /// Padded with zeros up to `feature_dim`.
    pub shift_translation: Vec<f64>,
    pub n_source: usize,
    pub n_target: usize,
    pub noise_sigma: f64,
    pub class_separation: f64,
    pub anisotropy: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            feature_dim: 8,
            minority_fraction_source: 0.06,
            minority_fraction_target: 0.10,
            shift_rotation_angle: 30f64.to_radians(),
            shift_translation: vec![2f64.sqrt(), 2f64.sqrt()],
            n_source: 4000,
            n_target: 4000,
            noise_sigma: 1.0,
            class_separation: 2.5,
            anisotropy: 3.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(format!("synthetic spec: {m}")));
        if self.feature_dim < 2 {
            return bad("feature_dim must be at least 2");
        }
        for f in [self.minority_fraction_source, self.minority_fraction_target] {
            if !(f > 0.0 && f <= 0.5) {
                return bad("minority fractions must lie in (0, 0.5]");
            }
        }
        if self.n_source == 0 || self.n_target == 0 {
            return bad("sizes must be positive");
        }
        if !(self.noise_sigma >= 0.0) || !(self.anisotropy > 0.0) {
            return bad("noise_sigma must be nonnegative and anisotropy positive");
        }
        if self.shift_translation.len() > self.feature_dim {
            return bad("translation longer than feature_dim");
        }
        Ok(())
    }

    fn minority_count(n: usize, fraction: f64) -> usize {
        ((n as f64 * fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1))
    }
}

fn draw_domain(
    spec: &SyntheticSpec,
    n: usize,
    minority_fraction: f64,
    rng: &mut impl rand::Rng,
) -> (Array2<f64>, Vec<u8>) {
    let n_pos = SyntheticSpec::minority_count(n, minority_fraction);
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n_pos)).collect();
    labels.shuffle(rng);
    let mut x = Array2::zeros((n, spec.feature_dim));
    for (mut row, &y) in x.outer_iter_mut().zip(&labels) {
        for (j, v) in row.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(rng);
            let scale = if j == 1 { spec.anisotropy } else { 1.0 };
            *v = z * spec.noise_sigma * scale;
        }
        if y == 1 {
            row[0] += spec.class_separation;
        }
    }
    (x, labels)
}

/// Generate `(source, target)`. The target carries labels so it can be
/// split; [`super::split_target`] strips them from the unlabeled part.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(TabularDataset, TabularDataset)> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, &[tag::SYNTHETIC]);
    let (xs, ys) = draw_domain(spec, spec.n_source, spec.minority_fraction_source, &mut rng);
    let (mut xt, yt) = draw_domain(spec, spec.n_target, spec.minority_fraction_target, &mut rng);

    let (sin, cos) = spec.shift_rotation_angle.sin_cos();
    for mut row in xt.outer_iter_mut() {
        let (a, b) = (row[0], row[1]);
        row[0] = cos * a - sin * b;
        row[1] = sin * a + cos * b;
        for (v, t) in row.iter_mut().zip(&spec.shift_translation) {
            *v += t;
        }
    }
    let names = TabularDataset::default_names(spec.feature_dim);
    Ok((
        TabularDataset::new(xs, Some(ys), DomainTag::Source, names.clone())?,
        TabularDataset::new(xt, Some(yt), DomainTag::TargetLabeled, names)?,
    ))
}
