use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("information sections carry {actual} bits but the payload has {expected}")]
    InconsistentLengths { expected: usize, actual: usize },

    #[error("parity section {parity} lists section {from} which is not an information section")]
    DanglingEdge { parity: usize, from: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("belief vector has zero total mass")]
    ZeroMass,

    #[error("no parity-consistent path survived stitching")]
    EmptyResult,

    #[error("bad operator dimensions: {0}")]
    BadDimensions(String),

    #[error("non-finite value in AMP state at iteration {iteration}")]
    NonFiniteState { iteration: usize },

    #[error("interval [{low_db}, {high_db}] dB does not bracket the target error rate")]
    NoBracket { low_db: f64, high_db: f64 },
}
