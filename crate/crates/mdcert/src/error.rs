use thiserror::Error;

use crate::model::Mode;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid function class: need 0 < mu <= L < inf, got mu = {mu}, L = {l}")]
    InvalidClass { mu: f64, l: f64 },
    #[error("stepsize must be positive and finite, got {0}")]
    InvalidStepsize(f64),
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("expected a {expected} problem, got {found}")]
    ModeMismatch { expected: Mode, found: Mode },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("missing coordinate `{0}`")]
    MissingCoordinate(String),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("coordinate `{name}` = {value} violates its sign constraint")]
    SignViolation { name: String, value: f64 },
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("no reference point supplied for the residual nonlinearity")]
    MissingReference,
    #[error("iterates became non-finite at step {step}")]
    Diverged { step: usize },
    #[error("trajectory does not decay")]
    Stalled,
    #[error("trajectory too short: {len} points, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("projection failed: {0}")]
    ProjectionFailed(String),
    #[error("witness does not verify: margin {margin:e}")]
    WitnessRejected { margin: f64 },
    #[error("solver failed: {0}")]
    SolverFailed(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
