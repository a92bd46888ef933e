use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("letter {letter} out of range for an alphabet of size {n}")]
    LetterOutOfRange { letter: usize, n: usize },

    #[error("numeric inverse failed: {0}")]
    NumericInverse(String),

    #[error("enumeration of {requested} items exceeds the budget of {limit}")]
    Budget { requested: u128, limit: u64 },

    #[error("branch counts differ: source has {source_n}, target has {target_n}")]
    BranchCountMismatch { source_n: usize, target_n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
