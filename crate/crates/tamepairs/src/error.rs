use thiserror::Error;

/// Errors shared by every module of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: u32, limit: u32 },

    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("grade {grade} out of range (max {max})")]
    GradeOutOfRange { grade: u32, max: u32 },

    #[error("operator has no entries with source index <= {0}")]
    EmptyOperator(u32),

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("invalid grade map S: {0}")]
    InvalidS(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),
}

impl Error {
    pub fn parse(position: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            position,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
