use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("png decoding failed: {0}")]
    Png(String),

    #[error("unsupported image layout: {0}")]
    UnsupportedImage(String),

    #[error("malformed PFM file: {0}")]
    Pfm(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("foreground mask is empty")]
    EmptyMask,

    #[error("non-manifold input: {0}")]
    NonManifold(String),

    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("prediction and ground truth do not overlap on any foreground pixel")]
    EmptyOverlap,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
