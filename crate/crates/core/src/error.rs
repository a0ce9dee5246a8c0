use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Annotation bytes did not match the expected schema.
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    /// Schema was fine but a domain invariant does not hold.
    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no feasible placement for entity {entity_id}")]
    Placement { entity_id: u32 },

    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),

    #[error("oracle failed on trial {trial}: {source}")]
    OracleTrial {
        trial: usize,
        #[source]
        source: crate::oracle::OracleError,
    },

    #[error("alignment error in document `{doc}`: {message}")]
    Alignment { doc: String, message: String },

    #[error("image error for {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("i/o error for {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn image(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Image {
            path: path.into(),
            source,
        }
    }
}
