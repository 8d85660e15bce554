use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chain order must be at least 2, got {0}")]
    ChainOrder(usize),

    #[error("significance level must lie strictly between 0 and 1, got {0}")]
    Alpha(f64),

    #[error("setting pair (a{a}, b{b}) is not part of the chain for N = {order}")]
    InadmissiblePair { a: usize, b: usize, order: usize },

    #[error("setting pair (a{a}, b{b}) has no trials")]
    MissingPair { a: usize, b: usize },

    #[error("setting pair (a{a}, b{b}) has {count} trial(s); a standard error needs at least 2")]
    TooFewTrials { a: usize, b: usize, count: u64 },

    #[error("two-qubit state is not normalized (squared norm {0})")]
    Unnormalized(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{field}: {reason}")]
    Config { field: String, reason: String },

    #[error("local-weight schedule emitted {weight} at trial {trial}, below its declared minimum {declared_min}")]
    ScheduleBelowMinimum {
        weight: f64,
        declared_min: f64,
        trial: u64,
    },

    #[error("block {block} has {len} trial(s) but the analyzed index is {index}")]
    ShortBlock { block: u64, len: usize, index: u32 },

    #[error("log is missing randomized-block protocol metadata; certification requires it")]
    MissingProtocol,

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("unknown fixture '{0}'")]
    UnknownFixture(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
