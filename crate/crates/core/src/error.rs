use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("line counts differ: {0}")]
    LineCountMismatch(String),

    #[error("line {line}: link {src}-{tgt} out of range for {src_len} source / {tgt_len} target tokens")]
    LinkOutOfRange {
        line: usize,
        src: usize,
        tgt: usize,
        src_len: usize,
        tgt_len: usize,
    },

    #[error("vocabulary: {0}")]
    Vocab(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model file: {0}")]
    Format(String),

    #[error("model file: unsupported version {0:?}")]
    Version(char),

    #[error("model file truncated while reading {0}")]
    Truncated(&'static str),

    #[error("feature {0:?} already present")]
    DuplicateFeature(String),

    #[error("zero-probability event ({src} / {tgt} -> {label}); use a positive smoothing constant")]
    ZeroProbability {
        src: String,
        tgt: String,
        label: String,
    },

    #[error("empty corpus: {0}")]
    EmptyCorpus(&'static str),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
