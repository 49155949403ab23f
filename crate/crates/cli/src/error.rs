use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A field failed validation; `path` is the location in the scenario file.
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("{file}: {msg}")]
    Parse { file: String, msg: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] drds_core::Error),
    #[error("{0} oracle(s) failed")]
    OracleFailure(usize),
}

impl CliError {
    pub fn invalid(path: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Invalid { path: path.into(), msg: msg.into() }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// 0 ok, 1 solver or i/o failure, 2 bad input, 3 oracle failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid { .. } | CliError::Parse { .. } => 2,
            CliError::Io { .. } => 1,
            CliError::OracleFailure(_) => 3,
            CliError::Core(e) => match e {
                drds_core::Error::Solver { .. } | drds_core::Error::Io(_) => 1,
                _ => 2,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
