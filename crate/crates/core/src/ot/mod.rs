//! Discrete optimal transport between minibatches: squared-Euclidean cost,
//! the label-adaptive reweight matrix, and two solvers for the coupling.

mod exact;
mod sinkhorn;

pub use exact::solve_exact;
pub use sinkhorn::{solve_sinkhorn, SinkhornParams};

use std::fmt::Write as _;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Marginal sums must equal 1 within this tolerance.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

/// Pairwise squared Euclidean distances, `n_s × n_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix(pub Array2<f64>);

/// Label-adaptive multipliers on the transport cost, `n_s × (n_l + n_u)`:
/// labeled target columns first, then unlabeled.
#[derive(Debug, Clone, PartialEq)]
pub struct ReweightMatrix {
    pub entries: Array2<f64>,
    pub n_labeled: usize,
}

/// Transport plan with its marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub plan: Array2<f64>,
    pub row_marginals: Array1<f64>,
    pub col_marginals: Array1<f64>,
}

impl Coupling {
    pub fn objective(&self, cost: ArrayView2<'_, f64>) -> f64 {
        (&self.plan * &cost).sum()
    }

    /// Largest absolute deviation of a row or column sum from its marginal.
    pub fn marginal_residual(&self) -> f64 {
        let rows = self.plan.sum_axis(Axis(1));
        let cols = self.plan.sum_axis(Axis(0));
        rows.iter()
            .zip(self.row_marginals.iter())
            .chain(cols.iter().zip(self.col_marginals.iter()))
            .fold(0.0, |m, (s, t)| m.max((s - t).abs()))
    }

    /// Tab-separated dump, one plan row per line.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for row in self.plan.outer_iter() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", line.join("\t"));
        }
        s
    }
}

/// `C[i][j] = ‖s_i − t_j‖²`.
pub fn cost_matrix(source: ArrayView2<'_, f64>, target: ArrayView2<'_, f64>) -> Result<CostMatrix> {
    if source.ncols() != target.ncols() {
        return Err(Error::Dimension {
            context: "cost matrix embedding width",
            expected: source.ncols(),
            actual: target.ncols(),
        });
    }
    let mut c = Array2::zeros((source.nrows(), target.nrows()));
    for (mut out_row, s) in c.outer_iter_mut().zip(source.outer_iter()) {
        for (out, t) in out_row.iter_mut().zip(target.outer_iter()) {
            *out = s.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    }
    Ok(CostMatrix(c))
}

/// `R = |y_s − y_t|` against labeled targets and `|y_s − ŷ_t|` against
/// unlabeled targets, where `ŷ_t` is the predicted positive probability.
pub fn reweight_matrix(
    source_labels: &[u8],
    target_labels: &[u8],
    unlabeled_probs: &[f64],
) -> Result<ReweightMatrix> {
    if let Some(p) = unlabeled_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Validation(format!("probability {p} outside [0,1]")));
    }
    let n_l = target_labels.len();
    let mut r = Array2::zeros((source_labels.len(), n_l + unlabeled_probs.len()));
    for (mut row, &ys) in r.outer_iter_mut().zip(source_labels) {
        let ys = f64::from(ys);
        for (j, &yt) in target_labels.iter().enumerate() {
            row[j] = (ys - f64::from(yt)).abs();
        }
        for (j, &p) in unlabeled_probs.iter().enumerate() {
            row[n_l + j] = (ys - p).abs();
        }
    }
    Ok(ReweightMatrix {
        entries: r,
        n_labeled: n_l,
    })
}

/// Elementwise `R ⊙ C`.
pub fn effective_cost(cost: &CostMatrix, reweight: &ReweightMatrix) -> Result<Array2<f64>> {
    if cost.0.dim() != reweight.entries.dim() {
        return Err(Error::Dimension {
            context: "reweight matrix",
            expected: cost.0.len(),
            actual: reweight.entries.len(),
        });
    }
    Ok(&cost.0 * &reweight.entries)
}

pub fn uniform_marginal(n: usize) -> Array1<f64> {
    Array1::from_elem(n, 1.0 / n as f64)
}

/// Which coupling solver to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exact,
    Sinkhorn(SinkhornParams),
}

impl SolverKind {
    pub fn solve(
        &self,
        cost: ArrayView2<'_, f64>,
        a: ArrayView1<'_, f64>,
        b: ArrayView1<'_, f64>,
    ) -> Result<Coupling> {
        match self {
            SolverKind::Exact => solve_exact(cost, a, b),
            SolverKind::Sinkhorn(p) => solve_sinkhorn(cost, a, b, p),
        }
    }
}

/// Shared input checks; returns the indices of rows and columns with
/// positive mass.
pub(crate) fn check_problem(
    cost: ArrayView2<'_, f64>,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if cost.dim() != (a.len(), b.len()) {
        return Err(Error::Dimension {
            context: "coupling marginals",
            expected: cost.len(),
            actual: a.len() * b.len(),
        });
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Validation("cost matrix has non-finite entries".into()));
    }
    if a.iter().chain(b.iter()).any(|&m| !(m >= 0.0) || !m.is_finite()) {
        return Err(Error::Validation("marginals must be finite and nonnegative".into()));
    }
    let (row_sum, col_sum) = (a.sum(), b.sum());
    if (row_sum - 1.0).abs() > MARGINAL_TOLERANCE || (col_sum - 1.0).abs() > MARGINAL_TOLERANCE {
        return Err(Error::Normalization { row_sum, col_sum });
    }
    let rows = (0..a.len()).filter(|&i| a[i] > 0.0).collect();
    let cols = (0..b.len()).filter(|&j| b[j] > 0.0).collect();
    Ok((rows, cols))
}
