use std::fmt;

/// Failure of a subcommand, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(e: impl fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn runtime(e: impl fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

/// Core errors caused by bad input are config errors; the rest are runtime.
pub fn classify(e: superpose::Error) -> CliError {
    use superpose::Error as E;
    match e {
        E::DimensionMismatch { .. } | E::InvalidSpec(_) | E::InvalidArgument(_) | E::Unsupported(_) | E::Parse { .. } => {
            CliError::config(e)
        }
        _ => CliError::runtime(e),
    }
}

pub type CliResult<T> = Result<T, CliError>;
