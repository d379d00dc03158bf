use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("item duration is zero for item {item_id}")]
    ZeroDuration { item_id: String },

    #[error("preference score undefined: no items heard")]
    NothingHeard,

    #[error("no sessions to estimate a traffic profile from")]
    NoSessions,

    #[error("no users survived the {stage} filter stage")]
    EmptyFilterStage { stage: &'static str },

    #[error("k = {k} is invalid for {n} vectors")]
    InvalidK { k: usize, n: usize },

    #[error("unknown cluster index {0}")]
    UnknownCluster(usize),

    #[error("training set has a single class")]
    SingleClass,

    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("recommended pool is empty: every item was predicted negative")]
    EmptyPool,

    #[error("empty slot schedule")]
    EmptySchedule,

    #[error("minimum share {min_share} is infeasible for {aspects} aspects")]
    InfeasibleMinShare { min_share: f64, aspects: usize },

    #[error("aspect {0} has a positive share but no items")]
    EmptyAspect(String),

    #[error("unknown item {0}")]
    UnknownItem(String),

    #[error("cannot rank an empty pool")]
    EmptyRankingPool,

    #[error("{0} requires at least one non-zero value")]
    AllZero(&'static str),

    #[error("empty list")]
    EmptyList,

    #[error("reference exposure has zero mean")]
    ZeroReference,

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
