use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension n = {0}; need n >= 2")]
    InvalidDimension(usize),

    #[error("invalid pair ({0}, {1}): indices must be distinct and below n")]
    InvalidPair(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("coupling failure at t = {time}: site {site} has w = {w} > x + 1/n = {x}")]
    CouplingFailure {
        time: f64,
        site: usize,
        w: f64,
        x: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
