use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operands live in different spaces (fock cutoff {left} vs {right})")]
    SpaceMismatch { left: usize, right: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("inconsistent schedule: {0}")]
    Schedule(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("integration failure at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("no dark level found in sweep")]
    NoDarkLevel,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("no emission in the requested channel window")]
    NoEmission,
}

pub type Result<T> = std::result::Result<T, Error>;
