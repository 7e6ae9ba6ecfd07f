//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("orbit through w0 = {w0} is open (w0 >= 1)")]
    OpenOrbit { w0: f64 },

    #[error("no branch j = {j} at epsilon = {epsilon} (requires epsilon < 1/j^2)")]
    NoBranch { j: usize, epsilon: f64 },

    #[error("branch j = {j} at epsilon = {epsilon} lies outside the supported w0 range")]
    BranchOutOfRange { j: usize, epsilon: f64 },

    #[error("ode integration failed: {0}")]
    Ode(String),

    #[error("blow-up at t = {time}: {reason}")]
    BlowUp {
        time: f64,
        reason: String,
        state: Box<crate::evolution::FrontState>,
    },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("eigen-solver failure: {0}")]
    Eigen(String),

    #[error("pole collision: {0}")]
    PoleCollision(String),

    #[error("pole flow diverged: {0}")]
    PoleDivergence(String),

    #[error("no steady coalescent solution with {n_pairs} pairs at epsilon = {epsilon} (requires epsilon*(2n-1) < 1)")]
    Window { n_pairs: usize, epsilon: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::LengthMismatch { .. }
                | Error::GridMismatch
                | Error::InvalidArgument(_)
                | Error::OpenOrbit { .. }
                | Error::NoBranch { .. }
                | Error::Precondition(_)
                | Error::Window { .. }
                | Error::Config(_)
        )
    }
}
