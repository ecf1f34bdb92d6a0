use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet size must be at least 2, got {0}")]
    Alphabet(usize),
    #[error("letter {letter} outside alphabet of size {kappa}")]
    Letter { letter: usize, kappa: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("negative rate {0}")]
    NegativeRate(String),
    #[error("nonzero diagonal rate on word {0:?}")]
    Diagonal(Vec<usize>),
    #[error("kernel row {row} sums to {sum}, not 1")]
    RowSum { row: usize, sum: String },
    #[error("kernel entry outside [0,1]: {0}")]
    KernelEntry(String),
    #[error("kernel is not positive; restrict the support first")]
    NonPositiveKernel,
    #[error("measure is not a probability vector: {0}")]
    NotProbability(String),
    #[error("stationary law is not unique (solution space of dimension {0})")]
    NonUniqueStationary(usize),
    #[error("matrix is reducible")]
    Reducible,
    #[error("matrix has a negative entry")]
    NegativeEntry,
    #[error("power iteration did not converge in {0} steps")]
    NoConvergence(usize),
    #[error("eigen data is not rational")]
    NotRational,
    #[error("state space of {needed} configurations exceeds the cap {cap}")]
    StateCap { needed: u128, cap: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
