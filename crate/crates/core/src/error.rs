use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("separation parameters rejected: {0}")]
    InvalidParams(String),

    #[error("scale {0} exceeds the 64-bit integer range used for set arithmetic")]
    ScaleOverflow(u32),

    #[error("index {index} is beyond the materialization horizon {horizon}")]
    HorizonExceeded { index: u64, horizon: u64 },

    #[error("norm requested for an unbounded support without a decay certificate")]
    MissingDecayCertificate,

    #[error("certificate failed: {0}")]
    Certificate(String),

    #[error("construction invariant violated: {0}")]
    Construction(String),

    #[error("vacuous experiment: every level has r_s = 0")]
    Vacuous,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
