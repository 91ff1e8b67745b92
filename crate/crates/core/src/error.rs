use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported basis for {op}: {basis}")]
    UnsupportedBasis { op: &'static str, basis: String },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("truncation guard violated for {op}; use dim >= {suggested_dim}")]
    Truncation { op: &'static str, suggested_dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("formula outside its domain: {0}")]
    Domain(String),

    #[error("optimizer did not converge after {iterations} iterations (alpha={alpha}, theta={theta}, |grad|={gradient_norm:.3e})")]
    NotConverged { iterations: usize, alpha: f64, theta: f64, gradient_norm: f64 },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("integration error: {0}")]
    Integration(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
