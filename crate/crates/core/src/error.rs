//! Error type shared by every module.

use thiserror::Error;

/// Result alias with the crate error.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of computations and checks.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("point is the origin")]
    ZeroPoint,
    #[error("chart coordinate {index} vanishes; formula undefined on the axis")]
    OnAxis { index: usize },
    #[error("invalid chart {chart} for dimension n={n}")]
    BadChart { chart: usize, n: usize },
    #[error("check `{check}` failed: worst residual {residual:.3e} (tolerance {tolerance:.3e}) at {witness}")]
    CheckFailed {
        check: String,
        residual: f64,
        tolerance: f64,
        witness: String,
    },
    #[error("evaluation failed at {location}: {reason}")]
    EvalFailure { location: String, reason: String },
    #[error("bad radii: need 0 <= r1 < r2 < 1, got r1={r1}, r2={r2}")]
    BadRadii { r1: f64, r2: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("dimension mismatch: expected n+1={expected} coordinates, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("outside domain: {0}")]
    OutsideDomain(String),
    #[error("function is not S¹-invariant: {0}")]
    NotInvariant(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("|z| = {norm:.3e} is within 2ε = {twice_eps:.3e} of the origin")]
    TooCloseToOrigin { norm: f64, twice_eps: f64 },
    #[error("unsupported dimension n={0}; only n=1 is supported")]
    UnsupportedDimension(usize),
    #[error("counterexample found: {0}")]
    CounterexampleFound(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Convenience constructor for check failures.
    pub fn check(check: &str, residual: f64, tolerance: f64, witness: impl Into<String>) -> Self {
        Error::CheckFailed {
            check: check.to_string(),
            residual,
            tolerance,
            witness: witness.into(),
        }
    }

    /// True for errors caused by the caller's configuration rather than a
    /// failed verification.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::DimensionMismatch { .. }
                | Error::NotInvariant(_)
                | Error::UnsupportedDimension(_)
                | Error::InvalidArgument(_)
                | Error::BadRadii { .. }
                | Error::BadChart { .. }
                | Error::InsufficientData(_)
        )
    }
}
