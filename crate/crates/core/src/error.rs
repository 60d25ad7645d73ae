use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty geometry: {0}")]
    EmptyGeometry(String),

    #[error("no DUC evidence for unit {0}")]
    NoDucEvidence(String),

    #[error("no radiance coverage for unit {0}")]
    NoRadianceCoverage(String),

    #[error("boundary violated: point ({x}, {y}) outside [-{lx}, {lx}] x [-{ly}, {ly}]")]
    BoundaryViolated { x: f64, y: f64, lx: f64, ly: f64 },

    #[error("unmatched tile {0}: no individual or group posterior available")]
    UnmatchedTile(String),

    #[error("initialization failed after {0} attempts: log density not finite")]
    InitializationFailed(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Data errors map to exit code 1; everything here is a data or input problem.
    pub fn exit_code(&self) -> i32 {
        1
    }
}
