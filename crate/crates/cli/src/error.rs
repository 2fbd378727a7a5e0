//! Errors of the experiment driver and their exit codes.

use thiserror::Error;

/// Failure of a CLI run.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: could not parse: {0}")]
    Parse(String),

    #[error("config: invalid `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("input: {0}")]
    Input(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] tfstab::Error),
}

impl CliError {
    /// 1 for configuration and input errors, 2 for failed validations,
    /// 3 for numerical guards.
    pub fn exit_code(&self) -> i32 {
        use tfstab::Error as E;
        match self {
            Self::Parse(_) | Self::Config { .. } | Self::Input(_) | Self::Io(_) => 1,
            Self::Validation(_) => 2,
            Self::Core(e) => match e {
                E::InvalidParameter { .. } | E::GridTooSmall { .. } | E::GridMismatch | E::UnsupportedOrder(_) => 1,
                _ => 3,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(e.to_string())
    }
}
