use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("line {line}: unknown POS tag `{tag}`")]
    UnknownPos { line: usize, tag: String },

    #[error("line {line}: invalid head {head} on token {token} (sentence has {len} tokens)")]
    InvalidHead {
        line: usize,
        token: usize,
        head: i64,
        len: usize,
    },

    #[error("no stories")]
    NoStories,

    #[error("empty sound bank")]
    EmptySoundBank,

    #[error("unknown sound id `{0}`")]
    UnknownSound(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero-length vector")]
    ZeroVector,

    #[error("degenerate labels: training data must contain both classes")]
    DegenerateLabels,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, field: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            line,
            field: field.into(),
            message: message.to_string(),
        }
    }

    /// Wraps an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
