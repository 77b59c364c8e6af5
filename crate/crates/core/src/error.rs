use std::path::PathBuf;

use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("unsupported kernel size {0}: only odd kernels are supported")]
    UnsupportedKernel(usize),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("tape already consumed by a previous backward pass")]
    StaleTape,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported image: {0}")]
    UnsupportedImage(String),

    #[error("image {height}x{width} is smaller than patch size {patch}")]
    ImageTooSmall { height: usize, width: usize, patch: usize },

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error(
        "non-finite loss at step {step} (lr {lr:e}, grad norm {grad_norm:e}, worst parameter {worst_param})"
    )]
    NonFiniteLoss {
        step: u64,
        lr: f64,
        grad_norm: f64,
        worst_param: String,
    },

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("checkpoint scale x{checkpoint} does not match requested scale x{requested}")]
    ScaleMismatch { checkpoint: usize, requested: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
