use thiserror::Error;

use crate::analytics::AnalyticsError;
use crate::geometry::GeometryError;
use crate::reid::ReidError;
use crate::scene::SceneError;
use crate::tracking::TrackingError;

/// Failure class, mapped onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Internal => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("data: {0}")]
    Data(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Reid(#[from] ReidError),
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("internal: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Scene(_) | Error::Reid(_) | Error::Geometry(_) => ErrorKind::Config,
            Error::Analytics(AnalyticsError::Params(_)) => ErrorKind::Config,
            Error::Parse { .. } | Error::Data(_) | Error::Tracking(_) | Error::Analytics(_) => ErrorKind::Data,
            Error::Io { .. } | Error::Internal(_) => ErrorKind::Internal,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind().exit_code()
    }
}
