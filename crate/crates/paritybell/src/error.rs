use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid value for `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("invalid calibration file: {0}")]
    Calibration(String),
    #[error(transparent)]
    Core(#[from] paritybell_core::Error),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub fn field(field: &str, message: impl Into<String>) -> Self {
        Error::Field { field: field.to_string(), message: message.into() }
    }
}
