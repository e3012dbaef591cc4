use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported field degree m={0} (supported: 3..=8)")]
    UnsupportedFieldDegree(u32),

    #[error("BCH code with m={m}, t={t} is degenerate (k <= 0)")]
    DegenerateCode { m: u32, t: usize },

    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("exhaustive enumeration needs k <= {max}, code has k = {k}")]
    EnumerationBound { k: usize, max: usize },

    #[error("invalid weight distribution: {0}")]
    InvalidPmf(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("code file line {line}: {msg}")]
    CodeFormat { line: usize, msg: String },

    #[error("CSV line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error("corrupt dataset header: {0}")]
    CorruptHeader(String),

    #[error("truncated dataset: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("record {record}: {msg}")]
    InvariantViolation { record: u64, msg: String },

    #[error("sample starvation after {draws} draws: {progress}")]
    Starvation { draws: u64, progress: String },

    #[error("bridge protocol error at frame {frame}: {msg}")]
    Protocol { frame: u64, msg: String },

    #[error("bridge timed out waiting for frame {frame}")]
    Timeout { frame: u64 },

    #[error("decoder failed at {ebn0_db} dB, seed {seed}, stream {stream}, frame {frame}: {source}")]
    Frame {
        ebn0_db: f64,
        seed: u64,
        stream: u64,
        frame: u64,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// The innermost error, looking through frame replay context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Frame { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self.root(), Error::Io(_))
    }

    pub fn is_usage(&self) -> bool {
        matches!(
            self.root(),
            Error::UnsupportedFieldDegree(_)
                | Error::DegenerateCode { .. }
                | Error::InvalidParameter(_)
                | Error::UnknownName { .. }
                | Error::InvalidPmf(_)
        )
    }
}
