use serde::{Deserialize, Serialize};

use super::{GradientSet, ModelParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// 0 disables the velocity buffer.
    pub momentum: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 128,
            momentum: 0.0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.momentum >= 0.0) || self.batch_size == 0 {
            return Err(Error::Validation(format!("invalid optimizer config {self:?}")));
        }
        Ok(())
    }
}

/// Plain SGD with optional heavy-ball momentum (`v ← μv + g`, `θ ← θ − lr·v`).
#[derive(Debug, Clone)]
pub struct Sgd {
    pub config: OptimizerConfig,
    velocity: Option<GradientSet>,
}

impl Sgd {
    pub fn new(config: OptimizerConfig) -> Self {
        Self {
            config,
            velocity: None,
        }
    }

    /// Apply one update in place. Non-finite gradients leave `params`
    /// untouched and return [`Error::Divergence`].
    pub fn step(&mut self, params: &mut ModelParams, grads: &GradientSet) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::Divergence("non-finite gradient".into()));
        }
        let lr = self.config.learning_rate;
        if self.config.momentum > 0.0 {
            let mu = self.config.momentum;
            let v = self.velocity.get_or_insert_with(|| GradientSet::zeros_like(params));
            for (vl, gl) in v.layers_mut().zip(grads.layers()) {
                vl.weights.zip_mut_with(&gl.weights, |a, &b| *a = mu * *a + b);
                vl.bias.zip_mut_with(&gl.bias, |a, &b| *a = mu * *a + b);
            }
            for (pl, vl) in params.layers_mut().zip(v.layers()) {
                pl.weights.scaled_add(-lr, &vl.weights);
                pl.bias.scaled_add(-lr, &vl.bias);
            }
        } else {
            for (pl, gl) in params.layers_mut().zip(grads.layers()) {
                pl.weights.scaled_add(-lr, &gl.weights);
                pl.bias.scaled_add(-lr, &gl.bias);
            }
        }
        params.bump_version();
        Ok(())
    }
}

/// Momentum-free update returning new parameters.
pub fn sgd_step(params: &ModelParams, grads: &GradientSet, config: &OptimizerConfig) -> Result<ModelParams> {
    let mut next = params.clone();
    Sgd::new(OptimizerConfig {
        momentum: 0.0,
        ..config.clone()
    })
    .step(&mut next, grads)?;
    Ok(next)
}
