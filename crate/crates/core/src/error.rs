use drds_conic::{ConicError, Status};
use thiserror::Error;

/// Which part of a synthesis run gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Assembly,
    Solve,
    Recovery,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Assembly => "assembly",
            Stage::Solve => "solve",
            Stage::Recovery => "recovery",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("step {k} outside horizon 0..={horizon}")]
    StepOutOfRange { k: usize, horizon: usize },
    #[error("gain is not block lower-triangular: block ({row}, {col}) is nonzero")]
    NotCausal { row: usize, col: usize },
    #[error("{what} must be positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { what: String, min_eig: f64 },
    #[error("{what} must be positive definite (min eigenvalue {min_eig:e})")]
    NotPd { what: String, min_eig: f64 },
    #[error("{0} must be symmetric")]
    NotSymmetric(String),
    #[error("invalid parameter {name}: {msg}")]
    Parameter { name: String, msg: String },
    #[error("{stage} stage: solver returned {status:?}")]
    Solver { stage: Stage, status: Status },
    #[error("halfspace {halfspace} is violated at the deterministic initial state")]
    InitialViolation { halfspace: usize },
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn param(name: &str, msg: impl Into<String>) -> Self {
        Error::Parameter { name: name.to_string(), msg: msg.into() }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
