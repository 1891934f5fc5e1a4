use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("duplicate points at indices {first} and {second}")]
    DuplicatePoints { first: usize, second: usize },

    #[error("density ordering violated at {point:?}: {detail}")]
    DensityOrder { point: Vec<f64>, detail: String },

    #[error("polyline is not monotone at vertex {vertex}")]
    NonMonotonePolyline { vertex: usize },

    #[error("no admissible (x, h) pair in the domain")]
    NoAdmissiblePair,

    #[error("empty domain")]
    EmptyDomain,

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
