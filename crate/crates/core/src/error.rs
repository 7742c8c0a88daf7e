use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("timestamps not strictly ascending for patient {patient_id} at index {index}")]
    Ordering { patient_id: String, index: usize },

    #[error("schema mismatch in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("stale forward cache: {0}")]
    StaleCache(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("marginals must sum to 1 (row sum {row_sum}, column sum {col_sum})")]
    Normalization { row_sum: f64, col_sum: f64 },

    #[error("sinkhorn did not converge after {iterations} iterations (residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("class {class} absent from {context}")]
    DegenerateClass { class: u8, context: String },

    #[error("degenerate pool: {0}")]
    DegeneratePool(String),

    #[error("sampling infeasible: need {requested} samples from a pool of {available}")]
    SamplingInfeasible { requested: usize, available: usize },

    #[error("non-finite loss term `{term}` at iteration {iteration}")]
    NonFiniteLoss {
        term: &'static str,
        iteration: usize,
        last_good: Option<Box<crate::nn::ModelParams>>,
    },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("config error for key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
