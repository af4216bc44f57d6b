use thiserror::Error;

/// Everything that can go wrong inside the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("divergence at step {step}: {entity} particle {index} left the finite range")]
    Divergence {
        step: usize,
        entity: &'static str,
        index: usize,
    },

    #[error("empirical measure is empty")]
    EmptyCloud,

    #[error("data index {index} out of range for a dataset of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("witness path was generated under different parameters (witness {witness}, expected {expected})")]
    HashMismatch { witness: String, expected: String },

    #[error("operation requires a quadratic pairwise functional")]
    NotQuadratic,

    #[error("operation requires batch size 1, got {0}")]
    BatchUnsupported(usize),

    #[error("invalid functional: {0}")]
    Spec(String),

    #[error("target covariance is singular")]
    SingularCovariance,

    #[error("infeasible schedule: {0}")]
    Infeasible(String),

    #[error("dataset rejected: {0}")]
    Dataset(String),

    #[error("cloud has no associated witness path")]
    MissingWitness,

    #[error("malformed witness file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
