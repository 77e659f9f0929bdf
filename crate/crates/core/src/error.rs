use thiserror::Error;

use crate::channel::MatrixKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("matrix kind mismatch: expected {expected:?}, found {found:?}")]
    KindMismatch { expected: MatrixKind, found: MatrixKind },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigensolver failed to converge on a {dim}x{dim} matrix")]
    NoConvergence { dim: usize },

    #[error("inconsistent spectrum: eigenvalue {value:e} is below -{tol:e}")]
    InconsistentSpectrum { value: f64, tol: f64 },

    #[error("discretization too coarse: eigenvalue #{index} = {value} lies outside [-{eps:e}, 1+{eps:e}]")]
    DiscretizationTooCoarse { index: usize, value: f64, eps: f64 },

    #[error("decay violation: fitted rate {0} is not positive")]
    DecayViolation(f64),

    #[error("not enough data: {0}")]
    InsufficientData(String),
}
