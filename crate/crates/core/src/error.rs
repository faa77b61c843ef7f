use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite: eigenvalue {eigenvalue:e}{}", node.map(|n| format!(" at node {n}")).unwrap_or_default())]
    Positivity { eigenvalue: f64, node: Option<usize> },

    #[error("matrix is not Hermitian: defect {0:e}")]
    NotHermitian(f64),

    #[error("eigendecomposition failed (non-finite input?)")]
    Eigen,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("moment is not in the range of the operator: relative residual {0:e}")]
    NotInRange(f64),

    #[error("no dual-feasible starting point could be constructed")]
    DualStartNotFound,

    #[error("rational family requires a one-dimensional support set (use the torus override to relax)")]
    DimensionRestriction,

    #[error("Jacobian is not sign-definite (dual variable too close to the cone boundary)")]
    JacobianNotDefinite,

    #[error("not enough converged trace points to fit a slope: {0}")]
    InsufficientTrace(usize),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
