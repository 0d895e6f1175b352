use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("malformed {format} document: {reason}")]
    Malformed { format: &'static str, reason: String },

    #[error("correlator {label} = {value} is outside [-{limit}, {limit}]")]
    OutOfRange { label: String, value: f64, limit: f64 },

    #[error("duplicate correlator key {0}")]
    DuplicateKey(String),

    #[error("unknown Pauli label {0:?}")]
    UnknownLabel(String),

    #[error("no measured entries")]
    NoMeasuredEntries,

    #[error("missing correlator {0}")]
    MissingCorrelator(String),

    #[error("coefficient matrix is zero: no witness")]
    ZeroCoefficients,

    #[error("pattern has no closed form (class General); use ne-sdp")]
    NoClosedForm,

    #[error("solver did not converge after {iterations} iterations (last gap {gap:.3e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("measurement sets are not nested: {0}")]
    NotNested(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
