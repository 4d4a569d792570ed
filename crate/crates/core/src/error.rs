use thiserror::Error;

use crate::roots::RootFailure;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A rank or dimension decision could not be certified by the singular-value gap.
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("map is not nilpotent")]
    NotNilpotent,
    #[error("map is not contractive (minimum eigenvalue of I - a(I) is {min_eigenvalue:e})")]
    NotContractive { min_eigenvalue: f64 },
    #[error("subspace is not invariant (residual {residual:e})")]
    NotInvariant { residual: f64 },
    #[error("vector is not in the majorization cone")]
    NotInCone,
    #[error("not a root of the state: {0}")]
    NotARoot(RootFailure),
    #[error("invalid type: {0}")]
    InvalidType(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
