//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("truth column has zero overlap with the source (T(theta) = 0)")]
    AllZeroOverlap,

    #[error("likelihood is positive where the source is zero")]
    DomainMismatch,

    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("logical probability must be positive, got {0}")]
    NonPositiveLogicalProb(f64),

    #[error("label column {0} is empty (all zero)")]
    EmptyLabel(usize),

    #[error("no label has a positive truth value at this instance")]
    NoPositiveTruth,

    #[error("row {0} degenerates in the channel step: all P(y_k) m^s vanish")]
    DegenerateRow(usize),

    #[error("mixture density is zero at grid point {0} where the data has mass")]
    ZeroMixtureDensity(usize),

    #[error("mixture component {0} receives no mass")]
    EmptyComponent(usize),

    #[error("conditional probability undefined: {0}")]
    UndefinedConditional(String),

    #[error("parameter grid is empty")]
    EmptyGrid,

    #[error("bad configuration: {0}")]
    BadConfig(String),
}
