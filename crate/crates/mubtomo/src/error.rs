//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid pauli text at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("{what} supports at most {max} qubits, got {n}")]
    SizeGuard {
        what: &'static str,
        n: usize,
        max: usize,
    },

    #[error("{what} is not defined for {n} qubits")]
    Unsupported { what: &'static str, n: usize },

    #[error("table construction failed at row {row}, column {column}: {message}")]
    Construction {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("invalid commuting set: {0}")]
    InvalidSet(String),

    #[error("invalid MUB table: {0}")]
    InvalidTable(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("conjugated operator is not a Pauli string; circuit is not Clifford ({0})")]
    NotClifford(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
