use thiserror::Error;

/// Errors surfaced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("power allocation infeasible after {retries} threshold backoffs (last threshold {last_threshold:.3e})")]
    PowerInfeasible { retries: usize, last_threshold: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("fusion failed: all bundle lines are parallel (condition number {condition:.3e})")]
    ParallelBundle { condition: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    EigenNonConvergence { sweeps: usize, off_norm: f64 },

    #[error("placement failed: {0}")]
    Placement(String),

    #[error("malformed dump: {0}")]
    Dump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
