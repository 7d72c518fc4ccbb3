use crate::ranking::ItemId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("item {0} appears more than once in a ranking")]
    DuplicateItem(ItemId),
    #[error("a comparison needs at least two rankers, got {0}")]
    TooFewRankers(usize),
    #[error("input ranking {0} is empty")]
    EmptyRanking(usize),
    #[error("output length {requested} is invalid: must be between 1 and {available} (distinct input items)")]
    InvalidLength { requested: usize, available: usize },
    #[error("click position {position} is outside the output ranking of length {len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("unknown credit function {0:?}")]
    UnknownCredit(String),
    #[error("unknown multileaving method {0:?}")]
    UnknownMethod(String),
    #[error("sample lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("requested {requested} users but only {available} are available")]
    NotEnoughUsers { requested: usize, available: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
