//! Entropy-regularised transport by log-domain Sinkhorn iterations.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_problem, Coupling};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkhornParams {
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop once every row and column sum is within `tol` of its marginal.
    pub tol: f64,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-2,
            max_iters: 100_000,
            tol: 1e-9,
        }
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

struct Duals<'a> {
    cost: ArrayView2<'a, f64>,
    log_a: Vec<f64>,
    log_b: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
}

impl Duals<'_> {
    fn update(&mut self, eps: f64) {
        let (m, n) = self.cost.dim();
        for i in 0..m {
            let lse = log_sum_exp((0..n).map(|j| (self.g[j] - self.cost[[i, j]]) / eps));
            self.f[i] = eps * (self.log_a[i] - lse);
        }
        for j in 0..n {
            let lse = log_sum_exp((0..m).map(|i| (self.f[i] - self.cost[[i, j]]) / eps));
            self.g[j] = eps * (self.log_b[j] - lse);
        }
    }

    fn plan(&self, eps: f64) -> Array2<f64> {
        Array2::from_shape_fn(self.cost.dim(), |(i, j)| {
            ((self.f[i] + self.g[j] - self.cost[[i, j]]) / eps).exp()
        })
    }

    fn residual(&self, eps: f64) -> f64 {
        // columns are exact right after the g-update, so rows carry the error
        let (m, n) = self.cost.dim();
        (0..m)
            .map(|i| {
                let s: f64 = (0..n)
                    .map(|j| ((self.f[i] + self.g[j] - self.cost[[i, j]]) / eps).exp())
                    .sum();
                (s - self.log_a[i].exp()).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Entropic coupling `argmin ⟨γ, C⟩ − ε·H(γ)` over the transport polytope.
///
/// Runs an ε-scaling warm start (halving from the cost range down to the
/// requested ε) before iterating at the target ε until the marginal
/// residual drops below `tol`. The warm start changes only the path, not
/// the fixed point.
pub fn solve_sinkhorn(
    cost: ArrayView2<'_, f64>,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    params: &SinkhornParams,
) -> Result<Coupling> {
    if !(params.epsilon > 0.0) {
        return Err(Error::Precondition("sinkhorn epsilon must be positive".into()));
    }
    let (rows, cols) = check_problem(cost, a, b)?;
    let sub = Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| cost[[rows[i], cols[j]]]);
    let mut duals = Duals {
        cost: sub.view(),
        log_a: rows.iter().map(|&i| a[i].ln()).collect(),
        log_b: cols.iter().map(|&j| b[j].ln()).collect(),
        f: vec![0.0; rows.len()],
        g: vec![0.0; cols.len()],
    };

    let target = params.epsilon;
    let range = sub.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut eps = range.max(target);
    let mut iters = 0;
    while eps > target {
        for _ in 0..50 {
            duals.update(eps);
            iters += 1;
        }
        eps = (eps * 0.5).max(target);
    }
    let mut residual = f64::INFINITY;
    while iters < params.max_iters.max(1) {
        duals.update(target);
        iters += 1;
        if iters % 10 == 0 || iters >= params.max_iters {
            residual = duals.residual(target);
            if residual < params.tol {
                break;
            }
        }
    }
    if !(residual < params.tol) {
        residual = duals.residual(target);
        if !(residual < params.tol) {
            return Err(Error::IterationLimit {
                iterations: iters,
                residual,
            });
        }
    }

    let sub_plan = duals.plan(target);
    let mut plan = Array2::zeros(cost.dim());
    for (ii, &i) in rows.iter().enumerate() {
        for (jj, &j) in cols.iter().enumerate() {
            plan[[i, j]] = sub_plan[[ii, jj]];
        }
    }
    Ok(Coupling {
        plan,
        row_marginals: Array1::from(a.to_vec()),
        col_marginals: Array1::from(b.to_vec()),
    })
}
