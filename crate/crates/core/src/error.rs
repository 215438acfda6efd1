//! Crate-wide error type.

use thiserror::Error;

use crate::pipeline::{FallbackAttempt, SoftLabelRun};

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A cell failed to parse or was non-finite. `row` is the 1-based data
    /// row (header excluded), `column` the header name.
    #[error("bad value at data row {row}, column {column:?}: {message}")]
    CsvCell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("malformed csv in {path}: {message}")]
    CsvFormat { path: String, message: String },

    #[error("schema violation in {file}: {message}")]
    Schema { file: String, message: String },

    #[error("duplicate dataset name {0:?}")]
    DuplicateDataset(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NonConvergence { sweeps: usize },

    #[error("non-finite loss: training diverged")]
    NonFiniteLoss,

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("empty index")]
    EmptyIndex,

    #[error("ground-truth labels required: {0}")]
    LabelsRequired(String),

    #[error("truth labels contain a single class")]
    SingleClassTruth,

    /// Every candidate (or too few of them) passed the transformation check.
    /// Carries the attempt trail and, for the multi-dataset method, whatever
    /// partial run could be assembled from the successes collected so far.
    #[error("candidate list exhausted after {attempts} attempts ({successes}/{required} transformations succeeded)")]
    Exhausted {
        attempts: usize,
        successes: usize,
        required: usize,
        trail: Vec<FallbackAttempt>,
        partial: Option<Box<SoftLabelRun>>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(file: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            file: file.into(),
            message: message.into(),
        }
    }
}
