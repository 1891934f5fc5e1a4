use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Numeric(String),

    #[error("{0}")]
    Io(String),

    #[error("empty series")]
    EmptySeries,
}

impl CliError {
    pub fn missing(key: &str) -> Self {
        CliError::Config(format!("missing key: {key}"))
    }

    pub fn invalid(key: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Config(format!("invalid value for key {key}: {reason}"))
    }

    /// 2 for configuration problems, 3 for numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::EmptySeries => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<paretolab_core::Error> for CliError {
    fn from(e: paretolab_core::Error) -> Self {
        use paretolab_core::Error as E;
        match e {
            E::InvalidParameter { .. }
            | E::GridTooCoarse(_)
            | E::DimensionMismatch { .. }
            | E::DensityOrder { .. }
            | E::DuplicatePoints { .. }
            | E::Parse(_) => CliError::Config(e.to_string()),
            E::Io(_) | E::Json(_) => CliError::Io(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
