use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed schema file: {0}")]
    Schema(String),
    #[error("effort column `{0}` not found")]
    MissingEffortColumn(String),
    #[error("non-positive effort {value} in row {row}")]
    NonPositiveEffort { row: usize, value: f64 },
    #[error("no usable rows after dropping incomplete records")]
    NoUsableRows,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid feature mask: {0}")]
    InvalidMask(String),
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} projects, got {got}")]
    TooFewProjects { needed: usize, got: usize },
    #[error("index {0} is not part of the cluster tree")]
    UnknownIndex(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular design matrix; collinear columns: {}", .0.join(", "))]
    Singular(Vec<String>),
    #[error("fold {fold} (project {project}) failed: {source}")]
    Fold {
        fold: usize,
        project: String,
        #[source]
        source: Box<Error>,
    },
    #[error("summaries do not cover identical datasets: {0}")]
    MismatchedDatasets(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
