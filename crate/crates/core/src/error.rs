use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed WAV file {path}: {detail}")]
    MalformedWav { path: PathBuf, detail: String },

    #[error("unsupported WAV encoding in {path}: {detail}")]
    UnsupportedEncoding { path: PathBuf, detail: String },

    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    SampleRateMismatch { left: u32, right: u32 },

    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty signal: {0}")]
    EmptySignal(&'static str),

    #[error("shift by {lag} would empty a signal of {len} samples")]
    ShiftUnderflow { lag: i64, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("separator exited with {code:?}: {stderr}")]
    SeparatorFailed {
        code: Option<i32>,
        stderr: String,
        outdir: PathBuf,
    },

    #[error("separator timed out after {seconds} s (output kept in {outdir})")]
    SeparatorTimeout { seconds: f64, outdir: PathBuf },

    #[error("separator did not produce {path}")]
    MissingStem { path: PathBuf },

    #[error("degenerate signal: {0}")]
    Degenerate(String),

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

    /// Attach the name of the pipeline stage that produced this error.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code for the CLI: 2 input/format, 3 separator, 4 degenerate signal.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::SeparatorFailed { .. }
            | Error::SeparatorTimeout { .. }
            | Error::MissingStem { .. } => 3,
            Error::Degenerate(_) => 4,
            _ => 2,
        }
    }
}
