use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate {x} outside tabulated range [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-Morse critical point at x = {location} (U'' = {curvature:e})")]
    NonMorse { location: f64, curvature: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:e})")]
    Convergence { iterations: usize, best_residual: f64 },

    #[error("degenerate well partition: {0}")]
    DegeneratePartition(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
