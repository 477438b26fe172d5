use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("interaction matrix rejected: {0}")]
    Matrix(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("weight: {0}")]
    Weight(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("chain failed to mix: {0}")]
    Mixing(String),
    #[error("Gram matrix rank deficient at degree {degree}: {detail}")]
    Rank { degree: usize, detail: String },
    #[error("statistics: {0}")]
    Statistics(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
