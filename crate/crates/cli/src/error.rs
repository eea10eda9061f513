use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Attaches the config block name to a core validation error.
    pub(crate) fn in_block(block: &str, err: eit_core::Error) -> Self {
        match err.root() {
            eit_core::Error::InvalidParameter { name, reason } => CliError::Config(format!("{block}.{name}: {reason}")),
            _ => CliError::from(err),
        }
    }
}

impl From<eit_core::Error> for CliError {
    fn from(err: eit_core::Error) -> Self {
        match err.root() {
            eit_core::Error::InvalidParameter { .. } => CliError::Config(err.to_string()),
            _ => CliError::Numeric(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
