use thiserror::Error;

use crate::profile::WaveProfile;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("cannot normalize the zero field")]
    ZeroField,

    #[error("mean of the profile vanishes (integral = {0:e})")]
    VanishingMean(f64),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// The minimizer ran out of iterations; the last iterate is attached.
    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        last: Box<WaveProfile>,
    },

    #[error("singular Jacobian in Newton iteration (reciprocal pivot ratio {rcond:e})")]
    SingularJacobian { rcond: f64 },

    #[error("Newton iteration diverged after {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("operator is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("ill-posed inverse: {0}")]
    IllPosed(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("solution blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
