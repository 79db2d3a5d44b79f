use std::path::PathBuf;

/// Failure classes of a run; each maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("solver did not converge: {0}")]
    Convergence(String),

    #[error(transparent)]
    Core(#[from] sbvp_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Convergence(_) => 3,
            LabError::Hypothesis(_) => 4,
            // an invalid parameter reaching the core is a configuration problem
            LabError::Core(sbvp_core::Error::InvalidParameter(_)) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
