use std::io;
use std::path::Path;

/// Failures of a CLI run, each mapped to a distinct process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub const EXIT_IO: u8 = 1;
    pub const EXIT_USAGE: u8 = 2;
    pub const EXIT_CONFIG: u8 = 3;
    pub const EXIT_NUMERICAL: u8 = 4;
    pub const EXIT_INFEASIBLE: u8 = 5;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => Self::EXIT_IO,
            CliError::Usage(_) => Self::EXIT_USAGE,
            CliError::Config { .. } => Self::EXIT_CONFIG,
            CliError::Numerical(_) => Self::EXIT_NUMERICAL,
            CliError::Infeasible(_) => Self::EXIT_INFEASIBLE,
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            context: path.display().to_string(),
            source,
        }
    }

    /// Attaches a config section to a core error raised while resolving it.
    pub fn in_section(section: &str, err: dsr_core::Error) -> Self {
        match err {
            dsr_core::Error::InvalidParameter { name, reason } => CliError::config(format!("{section}.{name}"), reason),
            other => other.into(),
        }
    }
}

impl From<dsr_core::Error> for CliError {
    fn from(err: dsr_core::Error) -> Self {
        match err {
            dsr_core::Error::InvalidParameter { name, reason } => CliError::config(name, reason),
            e @ dsr_core::Error::Quadrature(_) => CliError::Numerical(e.to_string()),
            e @ dsr_core::Error::Infeasible(_) => CliError::Infeasible(e.to_string()),
        }
    }
}
