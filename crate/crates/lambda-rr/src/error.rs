//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by construction, validation, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Randomization weight outside the admissible half-open interval.
    #[error("lambda must satisfy 0 < lambda <= 1, got {0}")]
    InvalidLambda(f64),

    /// A randomization matrix needs at least two categories.
    #[error("matrix size must be at least 2, got {0}")]
    InvalidSize(usize),

    /// Vector length does not match the matrix dimension.
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Tensor shape does not match the scheme's category grid.
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    /// Input matrix fails the bistochasticity checks.
    #[error("matrix is not bistochastic: {0}")]
    NotBistochastic(String),

    /// Elimination hit a pivot below the singularity threshold.
    #[error("matrix is singular to tolerance: pivot magnitude {pivot:.3e} at column {column}")]
    Singular { pivot: f64, column: usize },

    /// A requested allocation exceeds the configured cap.
    #[error("{what} requires {requested} entries, above the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    /// A perfect-privacy budget cannot be met with a positive lambda.
    #[error(
        "strength target {0} is unreachable: beta = 1 requires lambda = 0, \
         which has no inverse; choose a target strictly below 1"
    )]
    BetaUnreachable(f64),

    /// Expansion term count 2^m exceeds the cap.
    #[error("inverse expansion needs 2^{m} terms, above the cap of 2^{cap}")]
    TooManyFactors { m: usize, cap: usize },

    /// Schema-level validation failure.
    #[error("schema error: {0}")]
    Schema(String),

    /// Dataset content does not conform to the schema.
    #[error("data error: {0}")]
    Data(String),

    /// An estimate degenerated (e.g. no positive mass left to project).
    #[error("estimation error: {0}")]
    Estimate(String),

    /// A cross-check between a closed form and the oracle failed.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
