use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("invalid ancilla basis: {0}")]
    InvalidBasis(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("decomposition system is singular (condition estimate {0:.3e})")]
    SingularSystem(f64),

    #[error("{parties} parties exceeds the joint-space cap of {cap}")]
    JointSpaceCap { parties: usize, cap: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
