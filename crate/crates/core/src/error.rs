use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: row {row}, column '{column}': cannot parse {cell:?} as a number")]
    ParseCell {
        path: PathBuf,
        row: usize,
        column: String,
        cell: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("predictor index {index} out of bounds for {p} predictors")]
    InvalidIndex { index: usize, p: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("width mismatch: model expects {expected} features, got {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("singular fit: design matrix is rank deficient (column {column})")]
    SingularFit { column: usize },

    #[error("box-cox domain error: lambda*T + 1 = {value} <= 0 at T = {t} (lambda = {lambda})")]
    BoxCoxDomain { t: f64, lambda: f64, value: f64 },

    #[error("model returned non-finite prediction {value} for row {row}")]
    NonFinite { row: usize, value: f64 },

    #[error("model evaluation failed for predictor {predictor}, background row {background}: {source}")]
    Evaluation {
        predictor: usize,
        background: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("baseline prediction is zero; relative change is undefined")]
    ZeroBaseline,

    #[error("external model: {0}")]
    External(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}
