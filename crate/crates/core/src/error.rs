use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: field `{field}`: {message}")]
    Malformed {
        file: String,
        line: u64,
        field: String,
        message: String,
    },
    #[error("duplicate article ids: {}", .0.join(", "))]
    DuplicateIds(Vec<String>),
    #[error("no articles")]
    NoArticles,
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("projection is empty: no article declares two or more keywords")]
    EmptyProjection,
    #[error("network is empty")]
    EmptyNetwork,
    #[error("unknown keyword `{keyword}`; nearest matches: {}", .suggestions.join(", "))]
    UnknownKeyword {
        keyword: String,
        suggestions: Vec<String>,
    },
    #[error("neighborhood empty: corpus has no citation records")]
    EmptyNeighborhood,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no shared articles between classifications")]
    EmptyIntersection,
    #[error("every threshold yields an empty document network")]
    AllNetworksEmpty,
    #[error("{module}: {source}")]
    Module {
        module: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("snapshot `{0}` not found")]
    SnapshotNotFound(String),
    #[error("unknown resource `{0}`")]
    UnknownResource(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_module(self, module: &'static str) -> Self {
        Error::Module {
            module,
            source: Box::new(self),
        }
    }
}
