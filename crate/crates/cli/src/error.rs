//! Top-level error type carrying the exit-code classification.

use std::fmt;

/// Validation problems (bad config or arguments) exit with 1; runtime
/// problems (IO, malformed data, failing computation) exit with 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Runtime,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Validation, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Runtime, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 1,
            ErrorKind::Runtime => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(format!("io error: {e}"))
    }
}

/// Shorthand for mapping module errors with a context prefix.
pub fn runtime_ctx<E: fmt::Display>(ctx: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::runtime(format!("{ctx}: {e}"))
}

pub fn validation_ctx<E: fmt::Display>(ctx: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::validation(format!("{ctx}: {e}"))
}
