use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} ({left} vs {right})")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("duplicate qubit index {index}")]
    DuplicateQubit { index: usize },

    #[error("matrix is not Hermitian within tolerance {tolerance:e} (residue {residue:e})")]
    NotHermitian { tolerance: f64, residue: f64 },

    #[error("invalid network topology: {0}")]
    InvalidTopology(String),

    #[error("two-layer dimension 2^{requested} exceeds cap 2^{cap}")]
    DimensionCapExceeded { requested: usize, cap: usize },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("state fails density-matrix validation: {0}")]
    InvalidState(String),

    #[error("parameter vector has length {got}, circuit expects {expected}")]
    ParamLengthMismatch { got: usize, expected: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numeric validation failed: {0}")]
    NumericValidation(String),

    #[error("malformed input file {path}: {reason}")]
    MalformedFile { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
