use thiserror::Error;

/// Errors raised by model construction, belief updates and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{context}: probabilities sum to {sum} (expected 1)")]
    NotNormalized { context: String, sum: f64 },

    #[error("{context}: negative or non-finite probability {value}")]
    InvalidProbability { context: String, value: f64 },

    #[error("symbol index {index} out of range for variable `{variable}` (alphabet size {size})")]
    InvalidSymbol {
        variable: String,
        index: usize,
        size: usize,
    },

    #[error("expected a history of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),

    #[error("conditioning on an event of probability zero: {0}")]
    ZeroProbability(String),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("model structures differ: {0}")]
    StructureMismatch(String),

    #[error("problem needs {required} table entries, limit is {limit}")]
    Capacity { required: u128, limit: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;
