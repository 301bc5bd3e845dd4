use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped by the CLI exit code they map to, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("data error in {table}: {message}")]
    Data { table: String, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown vertex {0}")]
    UnknownVertex(String),

    #[error("unknown entity type `{0}`")]
    UnknownEntityType(String),

    #[error("unknown edge type `{0}`")]
    UnknownEdgeType(String),

    #[error("graph is not bipartite")]
    NotBipartite,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn data(table: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Data {
            table: table.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a human-readable prefix such as `fold 2, scheme BL`.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 config, 3 data, 4 internal invariant failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Schema(_) | Error::Config(_) => 2,
            Error::Io { .. }
            | Error::Data { .. }
            | Error::InvalidInput(_)
            | Error::UnknownVertex(_)
            | Error::UnknownEntityType(_)
            | Error::UnknownEdgeType(_)
            | Error::NotBipartite => 3,
            Error::Context { source, .. } => source.exit_code(),
            Error::Invariant(_) => 4,
        }
    }
}
