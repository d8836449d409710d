use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("column {0} is identically zero and cannot be normalized")]
    ZeroColumn(usize),

    #[error("index {index} out of range for p = {p}")]
    IndexOutOfRange { index: usize, p: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("design submatrix on columns {0:?} is rank deficient")]
    RankDeficient(Vec<usize>),

    #[error("subset enumeration budget exceeded: {0} subsets requested")]
    BudgetExceeded(u64),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("invalid arguments: {0}")]
    InvalidArgs(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate fit: residual degrees of freedom {df} >= n = {n}")]
    DegenerateFit { df: usize, n: usize },

    #[error("degenerate fold: column {0} is identically zero on a training split")]
    DegenerateFold(usize),

    #[error("coefficient for the conditioning variable is zero; importance undefined")]
    DegenerateCoefficient,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
