use std::path::PathBuf;

/// Errors raised by IO, file formats and pipeline orchestration.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] semflow_core::Error),
    #[error("{}: {source}", path.display())]
    InFile { path: PathBuf, source: semflow_core::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("config: {0}")]
    Config(String),
    #[error("export: {0}")]
    Export(String),
    #[error("artifact: {0}")]
    Artifact(String),
    #[error("embeddings: {0}")]
    Embeddings(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
