use std::path::PathBuf;

use thiserror::Error;

use crate::trajectory::ThinkDiagnostics;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no well-formed think segment (open tags: {}, close tags: {})", .diagnostics.open_tag_count, .diagnostics.close_tag_count)]
    MissingThinkSegment { diagnostics: ThinkDiagnostics },

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("{name} = {value} is outside [0, 1]")]
    Domain { name: &'static str, value: f64 },

    #[error("trajectory structure: {0}")]
    Structure(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("{} record id(s) have no matching truth: {}", .unmatched.len(), .unmatched.join(", "))]
    Join { unmatched: Vec<String> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors tied to a single input record; the pipeline counts these
    /// instead of aborting.
    pub fn is_record_level(&self) -> bool {
        matches!(
            self,
            Error::MissingThinkSegment { .. } | Error::Structure(_) | Error::Schema { .. } | Error::Format { .. }
        )
    }
}
