use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or config field failed validation. `field` is a dotted
    /// path such as `obfuscation.sigma`.
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("capacity exceeded: need {needed} bits, model holds {available}")]
    CapacityExceeded { needed: usize, available: usize },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than a failure while
    /// running. The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Invalid { .. } | Error::Parse { .. } | Error::Json(_) => true,
            Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
