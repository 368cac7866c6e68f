use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectral order {0}: must be at least 1")]
    InvalidOrder(usize),

    #[error("order mismatch: expected {expected}, got {actual}")]
    OrderMismatch { expected: usize, actual: usize },

    #[error("grid size mismatch: expected {expected} samples, got {actual}")]
    GridMismatch { expected: usize, actual: usize },

    #[error("frequency {k} outside the range -{}..={order}", order - 1)]
    FrequencyOutOfRange { k: i64, order: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("coupling is not invertible: min I'_f = {min_derivative:.3e}")]
    NonInvertibleCoupling { min_derivative: f64 },

    #[error("coupling too strong: eps * |g|_C1 = {bound:.4} must be below 1")]
    CouplingTooStrong { bound: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular or ill-conditioned linear system at Newton step {iteration} (condition estimate {condition:.3e})")]
    IllConditioned { iteration: usize, condition: f64 },

    #[error("Newton iteration left its basin at step {iteration}: residual {residual:.3e}")]
    Divergence { iteration: usize, residual: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("bad operator dump: {0}")]
    BadDump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
