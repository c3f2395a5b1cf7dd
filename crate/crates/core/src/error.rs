use thiserror::Error;

use crate::constructions::ConstructionReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside an operation's domain (zero inverse, bad dimensions, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An exhaustive search or enumeration would exceed its cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A randomized construction hit its retry cap. Carries the best attempt.
    #[error("construction failed after {attempts} attempts: {reason}")]
    Construction {
        attempts: u32,
        reason: String,
        best: Option<Box<ConstructionReport>>,
    },

    #[error("parse error (line {line}): {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
