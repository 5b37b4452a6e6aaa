use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the command-line tool. Each maps to an exit code and a
/// short kind label used on the single stderr line.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("{path}:{line}{}: {message}", .column.map(|c| format!(":{c}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: u64,
        column: Option<u64>,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] ppd_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(ppd_core::Error::BootstrapInfeasible { .. }) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::InvalidInput(_) => "invalid input",
            CliError::Parse { .. } => "parse error",
            CliError::Io { .. } => "io error",
            CliError::Core(ppd_core::Error::InvalidInput(_)) => "invalid input",
            CliError::Core(ppd_core::Error::DimensionMismatch(_)) => "dimension mismatch",
            CliError::Core(ppd_core::Error::BootstrapInfeasible { .. }) => "bootstrap infeasible",
        }
    }

    /// `error: <kind>: <detail>` on one line.
    pub fn report_line(&self) -> String {
        let detail = match self {
            CliError::Core(e) => match e {
                ppd_core::Error::InvalidInput(m) | ppd_core::Error::DimensionMismatch(m) => {
                    m.clone()
                }
                other => other.to_string(),
            },
            other => other.to_string(),
        };
        let flat: Vec<&str> = detail.split_whitespace().collect();
        format!("error: {}: {}", self.kind(), flat.join(" "))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
