//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Penalty parameters violate the family's validity range.
    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    /// The penalty derivative is set-valued at the origin; use
    /// `subdifferential_at_zero` instead.
    #[error(
        "penalty derivative is undefined at t = 0; the subdifferential there is [-lambda, lambda]"
    )]
    DerivativeAtZero,

    /// Grid parameters for the brute-force prox oracle are unusable.
    #[error("invalid prox oracle grid: {0}")]
    InvalidGrid(String),

    /// A design-matrix column is identically zero, so its coordinate
    /// subproblem is ill-posed.
    #[error("column {index} of the design matrix has zero norm")]
    ZeroColumn { index: usize },

    /// A non-finite value showed up where the math requires finite input.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// The problem data is structurally unusable (empty shapes, columns far
    /// from unit norm, ...).
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// Vector/matrix dimensions do not line up.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    /// Solver options fail validation.
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    /// An intermediate solver quantity became non-finite.
    #[error("corrupted solver state: {0}")]
    CorruptedState(String),

    /// Synthetic generator spec fails validation.
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    /// The subgradient witness failed its membership check, i.e. the pair
    /// of iterates did not come from one coordinate-descent sweep.
    #[error("subgradient membership violated at coordinate {index}: gap {gap:e}")]
    MembershipViolation { index: usize, gap: f64 },

    /// Not enough usable points for a rate fit.
    #[error("insufficient data for rate estimation: {0}")]
    InsufficientData(String),

    /// CSV parse failure; `line` is 1-based.
    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },

    /// A persisted document does not match its expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A persisted document carries an unsupported schema version.
    #[error("unsupported schema version: found {found:?}, expected {expected:?}")]
    UnsupportedVersion { found: String, expected: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
