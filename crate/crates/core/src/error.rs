use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state has zero norm")]
    ZeroNorm,

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not one (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("post-selection probability {0:e} is below the degenerate threshold")]
    DegeneratePostSelection(f64),

    #[error("derivative magnitude {0:e} is below the floor; estimator variance is unbounded")]
    ZeroDerivative(f64),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("{what} did not converge (best value {best:e}, gradient norm {grad_norm:e})")]
    NoConvergence {
        what: &'static str,
        best: f64,
        grad_norm: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
