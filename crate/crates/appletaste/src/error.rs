use appletaste_core::Error as CoreError;

/// Failure of a CLI run, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cap exceeded: {0}")]
    Cap(String),
    #[error("runtime assertion failed: {0}")]
    Runtime(String),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Cap(_) => 3,
            AppError::Runtime(_) => 4,
        }
    }

    pub fn config(msg: impl std::fmt::Display) -> Self {
        AppError::Config(msg.to_string())
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::CapExceeded(_) => AppError::Cap(e.to_string()),
            CoreError::EmptyVersionSpace | CoreError::NonRealizable | CoreError::Invariant(_) => {
                AppError::Runtime(e.to_string())
            }
            _ => AppError::Config(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        AppError::Config(format!("invalid JSON: {e}"))
    }
}

pub type AppResult<T> = std::result::Result<T, AppError>;
