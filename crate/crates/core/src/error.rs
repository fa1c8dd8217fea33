use std::path::PathBuf;

/// Crate-wide error type. Variants map onto the process exit codes used by
/// the command-line tool: `Config` and `Geometry` are exit 3, `Input` and
/// `Io` are exit 2, `Verification` is exit 1.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },

    /// An API was called outside its documented contract (programming error
    /// surfaced as a value so callers can report it instead of panicking).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite {what} in parameter '{name}'")]
    NonFinite { what: &'static str, name: String },

    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
