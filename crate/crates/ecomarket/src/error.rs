use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Model(#[from] ecomarket_core::Error),

    #[error("output: {0}")]
    Output(String),
}

impl HarnessError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Io { .. } => "io",
            HarnessError::Model(_) => "model",
            HarnessError::Output(_) => "output",
        }
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Output(e.to_string())
    }
}
