use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("ensemble too large: {0}")]
    TooLarge(String),
    #[error("cluster terms break the factorization required here")]
    ClusterModeUnsupported,
}
