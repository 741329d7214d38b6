use thiserror::Error;

/// Errors raised by state construction, local operations and the protocols built on them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state is not normalized: squared norm {0}")]
    NotNormalized(f64),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid local operation: {0}")]
    InvalidOperation(String),

    #[error("outcome {0} has zero probability")]
    ZeroProbabilityOutcome(usize),

    #[error("outcome index {index} out of range for {count} outcomes")]
    OutcomeOutOfRange { index: usize, count: usize },

    #[error("parameter out of range: {0}")]
    InvalidParameter(String),

    #[error("state too large for dense simulation: {0}")]
    TooLarge(String),

    #[error("resource state is not maximally entangled (coefficient spread {0})")]
    NotMaximallyEntangled(f64),

    #[error("insufficient singlets: need {needed}, have {available}")]
    InsufficientSinglets { needed: u64, available: u64 },

    #[error("likely subspace is empty: dimension cap 2^{0} < 1")]
    EmptySubspace(f64),

    #[error("conditional state is not pure (largest Schmidt weight {0})")]
    MixedConditionalState(f64),

    #[error("malformed transcript line {line}: {reason}")]
    MalformedTranscript { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
