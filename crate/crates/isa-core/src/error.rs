use thiserror::Error;

/// Errors shared across the estimation and inference pipeline.
#[derive(Debug, Error)]
pub enum IsaError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix asymmetry {max_asym:.3e} exceeds relative tolerance {tol:.1e}")]
    Asymmetric { max_asym: f64, tol: f64 },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid group partition: {0}")]
    InvalidPartition(String),

    #[error("diagonal block {block} is singular or not positive definite")]
    SingularBlock { block: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// `row` is 1-based, matching file and report conventions.
    #[error("linear program for row {row} is infeasible (lambda_prime = {lambda_prime}); retry with a larger lambda_prime")]
    ClimeRowInfeasible { row: usize, lambda_prime: f64 },

    #[error("every fit on the lambda path diverged")]
    AllFitsDiverged,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sample has {n} rows; an even count is required for splitting")]
    OddSampleCount { n: usize },

    #[error("cannot reach condition number {target}: shift {delta:.3e} does not dominate lambda_min {lambda_min:.3e}")]
    ConditionUnreachable {
        target: f64,
        delta: f64,
        lambda_min: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, IsaError>;
