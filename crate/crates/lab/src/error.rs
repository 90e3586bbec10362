use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("config [{section}] {key}: {msg}")]
    Value { section: String, key: String, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] schn_core::Error),
    #[error(transparent)]
    Walk(#[from] schn_walk::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
