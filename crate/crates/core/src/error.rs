use thiserror::Error;

use crate::feature_io::FeatureError;
use crate::metrics::MetricsError;
use crate::nn::NnError;
use crate::trainer::TrainError;
use crate::woa::WoaError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-level error, one variant per module.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Woa(#[from] WoaError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Coarse failure class, used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Io,
    Data,
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Io => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numeric => 4,
        }
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Feature(e) => e.kind(),
            Error::Nn(e) => e.kind(),
            Error::Woa(e) => e.kind(),
            Error::Train(e) => e.kind(),
            Error::Metrics(_) => ErrorKind::Data,
        }
    }
}
