use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("variable shape must have dimension >= 1")]
    EmptyShape,
    #[error("expression references variable {index} but only {declared} are declared")]
    UndeclaredVariable { index: usize, declared: usize },
    #[error("psd block has {0} rows, which is not a triangular number")]
    NotTriangular(usize),
    #[error("second-order block needs at least 2 rows, got {0}")]
    ShortSecondOrder(usize),
    #[error("cone block has no rows")]
    EmptyBlock,
    #[error("matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("malformed problem dump at line {line}: {msg}")]
    Dump { line: usize, msg: String },
}
