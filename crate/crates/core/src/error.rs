//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("unknown site label: {0}")]
    UnknownSite(String),

    #[error("layout mismatch: operands belong to different site layouts")]
    LayoutMismatch,

    #[error("dense dimension cap exceeded: {dim} > {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not representable in the string basis (residual {0:.3e})")]
    NotRepresentable(f64),

    #[error("invalid state `{label}`: {reason}")]
    InvalidState { label: String, reason: String },

    #[error("invalid step: {0}")]
    InvalidStep(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("invalid variable spec: {0}")]
    InvalidVariable(String),

    #[error("invalid pauli string `{0}`: {1}")]
    InvalidPauliString(String, String),

    #[error("scenario error at {pointer}: {message}")]
    Scenario { pointer: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn scenario(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Scenario {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    /// True for failures of numerical machinery rather than input validation.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian(_)
                | Error::NotUnitary(_)
                | Error::NoConvergence(_)
                | Error::NotRepresentable(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
