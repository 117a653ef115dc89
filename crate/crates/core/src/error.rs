use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("singular law: {0}")]
    SingularLaw(String),

    #[error("invalid boxcar width {width} for lattice size {d}")]
    InvalidWidth { d: usize, width: usize },

    #[error("no Barker code of length {0}")]
    UnsupportedBarkerLength(usize),

    #[error("window count {windows} does not divide lattice size {d} with at least 2 samples per window")]
    InvalidPartition { d: usize, windows: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("moment undefined: {0}")]
    UndefinedMoment(String),

    #[error("grid range error: {0}")]
    GridRange(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
