use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model dimension: K must be at least 1 (got {0})")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("design must contain at least one point")]
    EmptyDesign,

    #[error("design entry {value} at row {row}, column {col} lies outside [-1, 1]")]
    OutOfBounds { row: usize, col: usize, value: f64 },

    #[error("information matrix is singular")]
    Singular,

    #[error("invalid criterion value: {0}")]
    InvalidCriterionValue(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no reference value for {0}; supply a catalog entry or use best-found mode")]
    MissingReference(String),

    #[error("cannot summarize an empty result list")]
    EmptyResults,

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
