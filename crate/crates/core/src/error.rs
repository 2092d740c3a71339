use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid block partition: {0}")]
    Partition(String),
    #[error("invalid label {label} at sample {index}: logistic losses need ±1")]
    Label { index: usize, label: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no positive smoothness constant: dataset has no nonzero entries")]
    ZeroSmoothness,
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
