use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the inpainting library.
#[derive(Debug, Error)]
pub enum InpaintError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("inpainting mask has no known pixels")]
    EmptyMask,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular system: {unreached} unknown pixel(s) are not connected to any known pixel")]
    SingularSystem { unreached: usize },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<InpaintError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl InpaintError {
    pub(crate) fn dims(expected: impl ToString, actual: impl ToString) -> Self {
        InpaintError::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        InpaintError::Parse {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        InpaintError::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = InpaintError> = std::result::Result<T, E>;
