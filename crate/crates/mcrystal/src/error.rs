use thiserror::Error;

/// Errors raised by series arithmetic, window-matrix algebra and the
/// factorization pipeline.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("incompatible t-degree caps: {0} vs {1}")]
    IncompatibleTCaps(u8, u8),
    #[error("not a unit: lowest u-layer is not a single monomial at t-degree 0")]
    NotAUnit,
    #[error("not nilpotent: series has a term with u-exponent <= 0 at t-degree 0")]
    NotNilpotent,
    #[error("inverse of an exact multi-term series is unbounded; supply a precision cap")]
    UnboundedInverse,
    #[error("exact division failed: {0}")]
    NotExactlyDivisible(String),
    #[error("t-generator slot {0} out of range (max {1})")]
    TSlotOutOfRange(u8, u8),
    #[error("u-exponent {0} breached the configured floor {1}")]
    UFloorBreached(i64, i64),
    #[error("Q-degree {0} breached the configured ceiling {1}")]
    QCeilingBreached(i64, i64),
    #[error("certified row range is empty")]
    EmptyValidRange,
    #[error("matrix not invertible on the window: {0}")]
    NotInvertibleOnWindow(String),
    #[error("pivot at row {0} is not a monomial unit (try a larger u-order)")]
    PivotNotUnit(i64),
    #[error("factorization certification failed: {0}")]
    CertificationFailed(String),
    #[error("AL profile extraction failed: {0}")]
    ProfileExtractionFailed(String),
    #[error("unknown series object id: {0}")]
    UnknownObject(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
