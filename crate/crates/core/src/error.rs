use crate::geom::PlaneVec;
use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inversion did not converge: best residual {best_residual:e} at ({}, {}) after {iterations} iterations", best_point.x, best_point.y)]
    NonConvergence {
        best_residual: f64,
        best_point: PlaneVec,
        iterations: usize,
    },

    #[error("map is not strictly 1-Lipschitz: |H(a) - H(b)| / |a - b| = {ratio} at a = ({}, {}), b = ({}, {})", a.x, a.y, b.x, b.y)]
    LipschitzViolation { a: PlaneVec, b: PlaneVec, ratio: f64 },

    #[error("nonlinear solve failed: {message}")]
    SolveFailed { message: String, history: Vec<f64> },

    #[error("covering failure: {} uncovered grid points", uncovered.len())]
    CoveringFailure { uncovered: Vec<PlaneVec> },

    #[error("audit failed: {0}")]
    AuditFailed(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
