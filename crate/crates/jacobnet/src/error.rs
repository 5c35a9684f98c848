use std::path::PathBuf;

use jacobnet_core::dataset::DatasetError;
use jacobnet_core::metrics::MetricsError;
use jacobnet_core::model::ModelError;
use jacobnet_core::nn::NnError;
use jacobnet_core::workspace::WorkspaceError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing input file {0}")]
    MissingInput(PathBuf),
    /// `row` is 0-based.
    #[error("{path}: malformed row {row}: {reason}")]
    MalformedRow { path: PathBuf, row: usize, reason: String },
    #[error("{path}: bad metadata: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

impl Error {
    /// Process exit code: 2 usage, 3 IO, 4 data or model mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Io { .. } | Error::Json { .. } => 3,
            _ => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
