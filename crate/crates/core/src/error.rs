use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DcfError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sample needs at least 2 observations, got {0}")]
    TooFewObservations(usize),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("significance level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("bootstrap size must be at least {min}, got {got}")]
    TooFewReplicates { min: usize, got: usize },

    #[error("empty uniform range: lo={lo} must be below hi={hi}")]
    EmptyRange { lo: f64, hi: f64 },

    #[error("scale factor {index} is not positive: {value}")]
    NonPositiveScale { index: usize, value: f64 },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue} vs largest {max_eigenvalue}")]
    NotPsd { min_eigenvalue: f64, max_eigenvalue: f64 },

    #[error("matrix is not symmetric: |a_{row}{col} - a_{col}{row}| = {gap}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("{len} is not divisible by block size {block}")]
    NotDivisible { len: usize, block: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, DcfError>;
