use rmst_core::RmstError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A malformed data row or header. Line numbers are 1-based and count
    /// the header.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        /// The offending key, when there is one.
        key: Option<String>,
        message: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] RmstError),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// 3 for numerical failures (singular design, restriction time beyond
    /// the data), 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}
