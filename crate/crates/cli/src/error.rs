use thiserror::Error;

/// Failure of a CLI command, carrying its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),
    /// Outputs were written but the result failed a check.
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Core(#[from] qskyrmion::Error),
}

impl CliError {
    /// 0 success, 1 usage or IO, 2 validation, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use qskyrmion::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Json(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Core(e) => match e {
                E::Io(_) | E::Json(_) | E::Parse(_) => 1,
                E::TooManyUndefinedPoints { .. } | E::NotUnitary(_) => 3,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
