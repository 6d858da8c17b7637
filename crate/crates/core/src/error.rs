use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter or missing input named by the caller.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("source `{source_name}` has {available} {label} messages, {requested} requested (short by {})", requested - available)]
    InsufficientMessages {
        source_name: String,
        label: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("class {label} has {size} messages, fewer than the {k} folds requested")]
    ClassTooSmall {
        label: &'static str,
        size: usize,
        k: usize,
    },

    #[error("cannot train on an empty {0} class")]
    EmptyClass(&'static str),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("ill-posed evaluation: {0}")]
    IllPosed(String),

    /// An evaluation result broke one of its structural invariants.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
