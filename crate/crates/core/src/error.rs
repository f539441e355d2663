use thiserror::Error;

/// Errors produced anywhere in the band-structure pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid model: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("refusing to build a dense operator on {n_qubits} qubits (limit {limit})")]
    TooManyQubits { n_qubits: usize, limit: usize },

    #[error("missing data: {0}")]
    Missing(String),

    #[error("leakage out of the single-excitation sector: {leakage:.4} exceeds {limit}")]
    Leakage { leakage: f64, limit: f64 },

    #[error("objective returned non-finite value {value} at {point:?}")]
    NonFiniteObjective { value: f64, point: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
