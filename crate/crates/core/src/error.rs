use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A feature-matrix file that does not conform to the binary layout.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// The requested kernels do not fit in the configured memory budget.
    #[error("capacity exceeded: kernels need {required} bytes, budget is {available} bytes")]
    Capacity { required: u64, available: u64 },

    #[error("block {block} failed: {source}")]
    Worker {
        block: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }

    /// True for capacity failures, including ones wrapped by a worker.
    pub fn is_capacity(&self) -> bool {
        match self {
            Error::Capacity { .. } => true,
            Error::Worker { source, .. } => source.is_capacity(),
            _ => false,
        }
    }
}
