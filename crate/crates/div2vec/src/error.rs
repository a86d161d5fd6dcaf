use thiserror::Error;

/// Crate-wide error type. Construction and parsing errors carry enough
/// context to point at the offending input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(u32),

    #[error("edge ({0}, {1}) joins two nodes of the same partition")]
    PartitionViolation(u32, u32),

    #[error("invalid rating record (user {user}, item {item}): {reason}")]
    InvalidRating {
        user: String,
        item: String,
        reason: String,
    },

    #[error("cannot split {0} pair(s); at least 2 are required")]
    TooFewPairs(usize),

    #[error("invalid walk parameters: {0}")]
    InvalidWalkParams(String),

    #[error("graph has no edges; nothing to walk")]
    EmptyGraph,

    #[error("node {0} has no neighbors (dead end)")]
    DeadEnd(u32),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty corpus; nothing to train on")]
    EmptyCorpus,

    #[error("training diverged: non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training data contains a single class; need both positive and negative examples")]
    SingleClass,

    #[error("item {0} has no feature vector")]
    MissingFeatures(u32),

    #[error("list of {0} item(s) is too short for intra-list similarity")]
    ListTooShort(usize),

    #[error("recommendation lists have unequal lengths ({0} vs {1}); entropy-diversity requires a uniform k")]
    RaggedLists(usize, usize),

    #[error("no user has a valid recommendation list")]
    NoValidUsers,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: {msg}")]
    Format { path: String, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(path: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn format(path: &str, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_string(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: &str, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
