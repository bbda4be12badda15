use quizforge_core::jsonl::{IoError, ReadError};

/// Exit code 1: bad flags, bad config, invalid input data.
pub const EXIT_INVALID: i32 = 1;
/// Exit code 2: file system or network failure.
pub const EXIT_IO: i32 = 2;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::io(e.to_string())
    }
}

impl From<ReadError> for CliError {
    fn from(e: ReadError) -> Self {
        match e {
            ReadError::Io(e) => e.into(),
            invalid @ ReadError::Invalid { .. } => CliError::invalid(invalid.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
