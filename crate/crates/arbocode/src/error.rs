use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Syntax error in the GOG text format, with 1-based line/column.
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// A structural invariant of the input is violated.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The operation's precondition does not hold for this input.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The input is valid but outside what this build supports.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// Exit code for the CLI: 1 = validation failure, 2 = computation error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Invalid(_) => 1,
            _ => 2,
        }
    }
}
