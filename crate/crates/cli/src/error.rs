use thiserror::Error;
use timereise_core::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const INTERNAL: i32 = 4;
    /// Nothing to do, e.g. an empty method list.
    pub const NOTHING_TO_DO: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("warning: {0}")]
    NothingToDo(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Data(_) => exit::DATA,
            CliError::Internal(_) => exit::INTERNAL,
            CliError::NothingToDo(_) => exit::NOTHING_TO_DO,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidSpec(_) => CliError::Config(e.to_string()),
            CoreError::Parse { .. }
            | CoreError::Artifact { .. }
            | CoreError::Io { .. }
            | CoreError::ShapeMismatch { .. } => CliError::Data(e.to_string()),
            CoreError::InvalidInput(_) | CoreError::Unsupported(_) => {
                CliError::Internal(e.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
