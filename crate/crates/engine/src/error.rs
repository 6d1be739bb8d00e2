use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at row {row}, column {column}: {detail}")]
    Parse {
        row: u64,
        column: String,
        detail: String,
    },
    #[error("no usable rows in {}", .0.display())]
    EmptyChain(PathBuf),
    #[error(transparent)]
    Core(#[from] shadow_core::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("calibration did not converge after {iterations} outer iterations (last step {last_step:e})")]
    NonConvergence { iterations: usize, last_step: f64 },
}

impl EngineError {
    pub fn kind(&self) -> &'static str {
        match self {
            EngineError::Io { .. } => "Io",
            EngineError::Parse { .. } => "Parse",
            EngineError::EmptyChain(_) => "EmptyChain",
            EngineError::Core(e) => e.kind(),
            EngineError::Json(_) => "Json",
            EngineError::Csv(_) => "Csv",
            EngineError::NonConvergence { .. } => "NonConvergence",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| EngineError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, EngineError>;
