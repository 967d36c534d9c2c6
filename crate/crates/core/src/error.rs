use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("potential is not confining: {0}")]
    NonConfining(String),
    #[error("point {0} lies on the edge of the support")]
    OnSupportEdge(f64),
    #[error("cauchy transform needs a non-real argument, got {0}")]
    RealArgument(f64),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no step accepted down to dt = {dt}: {detail}")]
    NearCollision { dt: f64, detail: String },
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::InvalidConfig(_)
                | Error::InvalidEnsemble(_)
                | Error::NonConfining(_)
                | Error::Unsupported(_)
                | Error::Io { .. }
                | Error::Json { .. }
                | Error::Parse { .. }
        )
    }
}
