use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("system has no constraint pair")]
    NoConstraints,

    #[error("constraint subspace is not invariant under the symbol: residual {residual:.3e} exceeds {tol:.3e} at xi = {xi:?}")]
    InvarianceViolation {
        xi: Vec<f64>,
        residual: f64,
        tol: f64,
    },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error("numerical check failed: {0}")]
    CheckFailed(String),

    #[error("Lyapunov parameter search infeasible: worst point xi = {xi:?}, ratio {ratio:.6e}")]
    SearchInfeasible { xi: Vec<f64>, ratio: f64 },

    #[error("simulation aborted: {0}")]
    SimulationAborted(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
