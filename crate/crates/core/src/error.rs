use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("index range {a}..{b} outside grid with {n} steps")]
    OutOfRange { a: usize, b: usize, n: usize },
    #[error("time {0} is not a grid time")]
    OffGrid(f64),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("paths do not share a base grid path")]
    MismatchedBase,
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("boundary windows on the wrong side of the interval")]
    SideMismatch,
    #[error("effective sample size collapsed: {ess:.3} of {n} samples")]
    EssCollapse { ess: f64, n: usize },
    #[error("invalid cluster: {0}")]
    InvalidCluster(String),
    #[error("missing activity for cluster {0}")]
    MissingActivity(String),
    #[error("partition function estimate is not positive: {0}")]
    NonPositiveZ(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn spec(msg: impl Into<String>) -> Self {
        Error::InvalidSpec(msg.into())
    }
}
