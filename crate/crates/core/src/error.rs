use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid option, flag value, or configuration file entry.
    #[error("config error: {0}")]
    Config(String),

    /// A record in an input file could not be parsed.
    #[error("{path}:{line}: field `{field}`: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    /// Input data violates a contract (empty corpus, misaligned ids, ...).
    #[error("data error: {0}")]
    Data(String),

    /// An upstream pipeline artifact is missing.
    #[error("missing artifact {path}: run `{stage}` first")]
    MissingArtifact { path: PathBuf, stage: &'static str },

    /// The solver produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Prefixes the message of message-carrying variants, keeping the kind (and exit code).
    pub fn context(self, what: impl std::fmt::Display) -> Self {
        match self {
            Error::Config(m) => Error::Config(format!("{what}: {m}")),
            Error::Data(m) => Error::Data(format!("{what}: {m}")),
            Error::Numerical(m) => Error::Numerical(format!("{what}: {m}")),
            other => other,
        }
    }

    /// Process exit code: 2 config, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. } | Error::Data(_) | Error::MissingArtifact { .. } | Error::Io { .. } => 3,
            Error::Numerical(_) => 4,
        }
    }
}
