use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid index ({i}, {j}) out of range for {nx}x{ny} grid")]
    IndexOutOfRange { i: usize, j: usize, nx: usize, ny: usize },

    #[error("grid specs differ")]
    GridMismatch,

    #[error("grid of {nodes} nodes exceeds the dense factorization budget of {budget}; use a coarser grid")]
    GridTooLarge { nodes: usize, budget: usize },

    #[error("could not place {requested} buildings after {attempts} attempts; region too small")]
    LayoutInfeasible { requested: usize, attempts: usize },

    #[error("matrix factorization failed: {0}")]
    Factorization(String),

    #[error("semivariogram fit needs at least 3 bins, got {0}")]
    UnderdeterminedFit(usize),

    #[error("semivariogram fit is degenerate: {0}")]
    DegenerateFit(String),

    #[error("interpolation set is degenerate: {0}")]
    DegenerateSet(String),

    #[error("objective returned non-finite value {value} at {point:?}")]
    NonFiniteObjective { point: Vec<f64>, value: f64 },

    #[error("non-finite channel gain for GBS {gbs}")]
    NonFiniteGain { gbs: usize },

    #[error("exhaustive search needs {evaluations} evaluations, above the budget of {budget}; increase the candidate stride")]
    SearchBudgetExceeded { evaluations: u128, budget: u128 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
