use thiserror::Error;

/// Crate-wide error type.
///
/// `is_numeric` distinguishes runtime numeric failures (evaluation blew up,
/// singular matrix, ...) from configuration problems (bad dimensions, malformed
/// input, ...); the CLI maps the former to exit code 3 and the latter to 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("player count {0} outside 1..=24")]
    PlayerCount(usize),
    #[error("invalid coalition: {0}")]
    Coalition(String),
    #[error("invalid permutation: {0}")]
    Permutation(String),
    #[error("syntax error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("invalid game: {0}")]
    Game(String),
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that arise while computing with well-formed inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Eval(_) | Error::Numeric(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
