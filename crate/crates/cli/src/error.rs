use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(elliptika::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<elliptika::Error> for CliError {
    fn from(e: elliptika::Error) -> Self {
        match e {
            elliptika::Error::InvalidInput(m) => CliError::Usage(m),
            elliptika::Error::DimensionMismatch { expected, found } => {
                CliError::Usage(format!("dimension mismatch: expected {expected}, found {found}"))
            }
            other => CliError::Numeric(other),
        }
    }
}

impl CliError {
    /// 2 for usage errors, 3 for numeric, domain and i/o failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
