use thiserror::Error;

/// Errors raised by the laboratory's constructors and analyses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("atom {index} has non-positive or non-finite weight {weight}")]
    InvalidWeight { index: usize, weight: f64 },

    #[error("duplicate point id {0:?}")]
    DuplicatePoint(String),

    #[error("empty space or subset: {0}")]
    Empty(&'static str),

    #[error("transition row {row} is not stochastic (sum {sum}, min entry {min})")]
    NotStochastic { row: usize, sum: f64, min: f64 },

    #[error("detailed balance violated at ({x}, {y}): residual {residual:e}")]
    DetailedBalance { x: usize, y: usize, residual: f64 },

    #[error("atom index {0} is out of range")]
    UnknownAtom(usize),

    #[error("Dirichlet exponent must be >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("{atoms} atoms exceed the enumeration cap {cap}; {hint}")]
    CapExceeded { atoms: usize, cap: usize, hint: &'static str },

    #[error("invalid generator set: {0}")]
    InvalidGenerators(String),

    #[error("generator subset is not admissible: {0}")]
    InvalidSubset(String),

    #[error("chain compatibility violated at level {level}, generator {generator:?}, coset {coset}")]
    ChainCompatibility { level: usize, generator: String, coset: usize },

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

pub type Result<T> = std::result::Result<T, LabError>;
