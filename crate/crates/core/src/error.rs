use std::path::{Path, PathBuf};

use thiserror::Error;

/// Errors raised by the pipeline stages.
///
/// Physics rejections (a mesh failing a validity stage) are not errors; they
/// are reported through [`crate::topology::Verdict`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}:{line}: {message}")]
    Parse { context: String, line: usize, message: String },
    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("mesh is not watertight: {0}")]
    NotWatertight(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),
    #[error("element {element} has non-positive volume {volume:e}")]
    DegenerateElement { element: usize, volume: f64 },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("unknown material `{0}`")]
    UnknownMaterial(String),
    #[error("unknown object class `{0}`")]
    UnknownClass(String),
    #[error("unsupported WAV variant: {0}")]
    UnsupportedFormat(String),
    #[error("hollow shell splits into {components} pieces even at resolution {resolution}")]
    ShellDisconnected { resolution: usize, components: usize },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub(crate) fn parse(context: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { context: context.into(), line, message: message.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
