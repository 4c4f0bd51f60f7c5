use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the inference pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("covariate `{covariate}` is missing in some but not all rows of group `{group}`")]
    PartialCovariate { group: String, covariate: String },

    #[error("covariate `{covariate}` has zero variance within {scope}")]
    ZeroVariance { covariate: String, scope: String },

    #[error("degenerate module {0}: all entries are zero")]
    DegenerateModule(u32),

    #[error("invalid data: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { iteration: usize, what: String },

    #[error("coefficient precision matrix for group `{group}` is not positive definite after {retries} jitter retries")]
    NotPositiveDefinite { group: String, retries: usize },

    #[error("key sets differ; symmetric difference: {0:?}")]
    KeyMismatch(Vec<String>),

    #[error("group `{0}` has no posterior draws")]
    UnknownGroup(String),

    #[error("fold {fold} leaves group `{group}` with no training subjects; re-stratify")]
    EmptyTrainingGroup { fold: usize, group: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
