use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error("structural error: {0}")]
    Structure(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dense dimension {dim} exceeds the configured limit {limit}")]
    DenseLimit { dim: usize, limit: usize },
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("state is not in the canonical gauge")]
    NotCanonical,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient data support: dataset windows of {have} sites cannot cover projectors on {need} sites")]
    InsufficientSupport { have: usize, need: usize },
    #[error("gap lower bound {0} is not positive; the witness is vacuous")]
    VacuousGap(f64),
    #[error("expectation value {0} lies outside [-1, 1]")]
    ExpectationOutOfRange(f64),
}
