use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report. The CLI maps each variant onto a
/// fixed process exit code through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Ingestion {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed document: {0}")]
    Format(String),

    #[error("probability undefined on an empty dataset")]
    EmptyDataset,

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("attribute index {index} out of range for {len} attributes")]
    Index { index: usize, len: usize },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("tree construction failed: {0}")]
    Construction(String),

    #[error("inconsistent labeling criteria: {0}")]
    InconsistentCriteria(String),

    #[error("branch {0} has an empty design box")]
    InconsistentBranch(String),

    #[error("no branch qualifies: {0}")]
    Selection(String),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("morphing system is singular or ill-conditioned (condition estimate {estimate:.3e})")]
    Conditioning { estimate: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "parameter",
            Error::Ingestion { .. } => "ingestion",
            Error::Io { .. } => "io",
            Error::Json(_) | Error::Format(_) => "format",
            Error::EmptyDataset => "empty-dataset",
            Error::InvalidSplit(_) => "invalid-split",
            Error::Index { .. } => "index",
            Error::Schema(_) => "schema",
            Error::Construction(_) => "construction",
            Error::InconsistentCriteria(_) => "criteria",
            Error::InconsistentBranch(_) => "branch",
            Error::Selection(_) => "selection",
            Error::DegenerateCurve(_) => "degenerate-curve",
            Error::Conditioning { .. } => "conditioning",
        }
    }

    /// 2 = I/O and ingestion, 3 = construction, 4 = selection, 5 = numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Ingestion { .. }
            | Error::Io { .. }
            | Error::Json(_)
            | Error::Format(_)
            | Error::InconsistentCriteria(_) => 2,
            Error::EmptyDataset
            | Error::InvalidSplit(_)
            | Error::Index { .. }
            | Error::Schema(_)
            | Error::Construction(_) => 3,
            Error::Selection(_) | Error::InconsistentBranch(_) => 4,
            Error::InvalidParameter(_)
            | Error::DegenerateCurve(_)
            | Error::Conditioning { .. } => 5,
        }
    }
}
