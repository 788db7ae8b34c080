use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown tag `{0}`")]
    UnknownTag(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("feature space mismatch: {0}")]
    FeatureSpaceMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("objective returned a non-finite value at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("line search failed at iteration {iteration} after {trials} trials")]
    LineSearch { iteration: usize, trials: usize },

    #[error("need at least {dims} verses for {dims} dimensions, got {verses}")]
    TooFewVerses { verses: usize, dims: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Process exit status for this error class: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 1,
            Error::NonFinite { .. } | Error::LineSearch { .. } => 3,
            _ => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_class() {
        assert_eq!(Error::InvalidConfig("x".into()).exit_code(), 1);
        assert_eq!(Error::parse(3, "bad").exit_code(), 2);
        assert_eq!(Error::Empty("x").exit_code(), 2);
        assert_eq!(Error::NonFinite { iteration: 2 }.exit_code(), 3);
        assert_eq!(Error::LineSearch { iteration: 1, trials: 50 }.exit_code(), 3);
    }
}
