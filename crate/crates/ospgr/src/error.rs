use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] ospgr_core::Error),

    /// Document does not match the schema; `path` points at the field.
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    /// Document parsed but breaks a game invariant.
    #[error("invalid {path}: {message}")]
    Invariant { path: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invariant {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(_) | Error::Invariant { .. } => "validation",
            Error::Schema { .. } | Error::Json(_) => "schema",
            Error::Usage(_) => "usage",
            Error::Io { .. } => "io",
            Error::Csv(_) => "output",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
