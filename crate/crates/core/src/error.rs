use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants fall into three families that the command-line front end maps
/// onto distinct exit codes: usage/configuration, data validation and
/// numerical failure (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error("non-numeric cell {value:?} at row {row}, column {column:?}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("N < 2: dataset has {n} row(s), at least {min} required")]
    TooFewRows { n: usize, min: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("constant output component {component}")]
    ConstantOutput { component: usize },

    #[error("degenerate correlation window at index {index}")]
    DegenerateWindow { index: usize },

    #[error("incompatibility undefined for fewer than two L-values (got {0})")]
    TooFewLValues(usize),

    #[error("index sets overlap at row {0}")]
    Overlap(usize),

    #[error("row index {index} out of range for {n} rows")]
    OutOfRange { index: usize, n: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix not PD (jitter up to {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("rank-deficient design matrix")]
    RankDeficient,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("chain failed at iteration {iteration}: {source}")]
    Chain {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 usage, 3 data validation, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Precondition(_) => 2,
            Error::NotPositiveDefinite { .. }
            | Error::RankDeficient
            | Error::NonFinite(_)
            | Error::DegenerateWindow { .. }
            | Error::Chain { .. } => 4,
            _ => 3,
        }
    }
}
