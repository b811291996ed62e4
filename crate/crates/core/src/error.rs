use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("non-numeric feature value {value:?} at line {line}, column {column}")]
    NonNumeric {
        line: u64,
        column: usize,
        value: String,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset has a single class; at least two are required")]
    SingleClass,

    #[error("label column {0} not found")]
    LabelColumnNotFound(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("class {class:?} has {count} members, {required} required")]
    ClassTooSmall {
        class: String,
        count: usize,
        required: usize,
    },

    #[error("objective became non-finite at iteration {iteration}; standardize the features and retry")]
    NonFiniteObjective { iteration: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidParameter(_)
                | Error::ClassTooSmall { .. }
                | Error::SingleClass
                | Error::EmptyDataset
                | Error::LabelColumnNotFound(_)
                | Error::MissingFile(_)
                | Error::NonNumeric { .. }
                | Error::Malformed(_)
                | Error::NotPositiveSemidefinite { .. }
        )
    }
}
