use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix is not symmetric (|s[{row}][{col}] - s[{col}][{row}]| = {gap:e})")]
    NonSymmetric { row: usize, col: usize, gap: f64 },

    #[error("covariance matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("degrees of freedom must exceed 2 for a finite covariance, got {0}")]
    BadDegreesOfFreedom(f64),

    #[error("custom generator failed normalization: {0}")]
    BadNormalization(String),

    #[error("density generator evaluated at negative argument {0}")]
    NegativeArgument(f64),

    #[error("weight vector is zero")]
    ZeroWeightVector,

    #[error("probability {0} is outside (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("invalid probability subset: {0}")]
    InvalidSubset(String),

    #[error("probability subset has zero Lebesgue measure")]
    EmptySubset,

    #[error("integral did not converge: {0}")]
    DivergentIntegral(String),

    #[error("only {got} draws fell in the conditioning event (need at least {needed})")]
    TooFewConditionedSamples { got: usize, needed: usize },

    #[error("at least {needed} draws are required, got {got}")]
    TooFewDraws { got: usize, needed: usize },

    #[error("conditional variance of the benchmark is not positive ({0:e})")]
    DegenerateConditionalVariance(f64),

    #[error("no convergence after {iterations} iterations: {detail}")]
    NoConvergence { iterations: usize, detail: String },

    #[error("partition size {got} outside supported range {min}..={max}")]
    KOutOfRange { got: usize, min: usize, max: usize },

    #[error("cell objective is not monotone near {at}: {detail}")]
    NonMonotoneObjective { at: f64, detail: String },

    #[error("cell {cell} holds {count} rows, need at least {needed}")]
    CellTooSmall { cell: usize, count: usize, needed: usize },

    #[error("{rows} rows is too few for {cells} cells (need {needed})")]
    TooFewRows { rows: usize, cells: usize, needed: usize },

    #[error("matrix shapes differ: {0}")]
    ShapeMismatch(String),

    #[error("operation not supported for this generator family: {0}")]
    UnsupportedFamily(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
