use thiserror::Error;

/// Failure while reading a Solomon-format instance.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("pair (vehicle {vehicle}, customer {customer}) is not feasible in the current state")]
    InfeasiblePair { vehicle: usize, customer: usize },

    #[error("no feasible vehicle-customer pair while {remaining} customers remain unserved")]
    Stranded { remaining: usize },

    #[error("network input is not finite")]
    NonFiniteInput,

    #[error("training diverged: loss is {loss}")]
    Divergence { loss: f64 },

    #[error("cannot sample from an empty replay buffer")]
    EmptyBuffer,

    #[error("batch is empty")]
    EmptyBatch,

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SolverError> = std::result::Result<T, E>;
