use thiserror::Error;

/// Failures of a CLI run, each with its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("refused: {0}")]
    Scale(String),
    #[error("{0}")]
    Core(slr_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Scale(_) => 3,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<slr_core::Error> for CliError {
    fn from(e: slr_core::Error) -> Self {
        use slr_core::Error as E;
        match e {
            E::ScaleLimit { .. } => CliError::Scale(e.to_string()),
            E::InvalidParameter(_)
            | E::Parse { .. }
            | E::InvalidTree(_)
            | E::LeafSetMismatch(_)
            | E::DimensionMismatch(_) => CliError::Config(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
