use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("click ({x}, {y}) lies outside the {width}x{height} image")]
    ClickOutOfBounds {
        x: u32,
        y: u32,
        width: usize,
        height: usize,
    },

    #[error("segmentation needs at least one positive click")]
    NoPositiveClick,

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("ground truth mask is empty")]
    EmptyGroundTruth,

    #[error("prediction already equals ground truth; no error region to click")]
    NoErrorRegion,

    #[error("polygon edit rejected: {0}")]
    PolygonEdit(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed {what} at line {line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("dangling category reference {0}")]
    DanglingCategory(u32),

    #[error("session {instance} failed at click {click}: {source}")]
    Session {
        instance: String,
        click: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("propagation failed at frame {frame}: {source}")]
    Propagation {
        frame: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
