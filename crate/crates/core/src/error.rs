use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not Hermitian within tolerance")]
    NotHermitian,
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("unknown channel model `{0}`")]
    UnknownModel(String),
    #[error("distance {distance} m outside the placement range [{min}, {max}] m")]
    OutOfRange { distance: f64, min: f64, max: f64 },
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate instance: channel row {0} is zero")]
    DegenerateInstance(usize),
    #[error("pool of {available} pairs is too small, need {needed}")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("solver redraw rate exceeded: {redraws} redraws for {count} records")]
    RedrawRateExceeded { redraws: usize, count: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("node {0} is not recorded in this graph")]
    GraphNotRecorded(usize),
    #[error("unsupported file version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("online history is empty at slot 0")]
    EmptyHistory,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss at step {0}")]
    NonFiniteLoss(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
