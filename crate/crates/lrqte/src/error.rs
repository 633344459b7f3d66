//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Operands act on different qubit counts.
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },

    /// A configuration value failed validation. The message names the key.
    #[error("config error: {0}")]
    Config(String),

    /// A numerical routine produced or received non-finite or invalid data.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The request exceeds what the dense machinery can represent.
    #[error("capability error: {0}")]
    Capability(String),

    /// An index was out of range for the bound object.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: config errors exit 2, anything else 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            _ => 3,
        }
    }
}
