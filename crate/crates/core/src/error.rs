use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid eps {0}: must lie in (0, 1]")]
    InvalidEps(f64),

    #[error("invalid upscale target {target_w}x{target_h} for a {src_w}x{src_h} source")]
    InvalidTarget {
        src_w: usize,
        src_h: usize,
        target_w: usize,
        target_h: usize,
    },

    #[error("enhancer unavailable: {0}")]
    EnhancerUnavailable(String),

    #[error("enhancer protocol error: {0}")]
    Protocol(String),

    #[error("cannot build a CDF from an empty series")]
    EmptySeries,

    #[error("trace gap: expected timestamp {expected} ms, found {found} ms")]
    TraceGap { expected: u64, found: u64 },

    #[error("trace has no samples")]
    EmptyTrace,

    #[error("time {t} s precedes trace start {start} s")]
    OutOfRange { t: f64, start: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("link starved: {remaining_bits} bits still queued after {horizon} s at zero bitrate")]
    Starvation { remaining_bits: f64, horizon: f64 },

    #[error("latency model mismatch: {0}")]
    WrongPath(String),

    #[error("controller input out of order: {now} s after {last} s")]
    Ordering { now: f64, last: f64 },

    #[error("command effective at {effective_at} s applied at {now} s")]
    TooEarly { now: f64, effective_at: f64 },

    #[error("runs are not comparable: {0}")]
    IncomparableRuns(String),

    #[error("{video}/{method}: {source}")]
    Run {
        video: String,
        method: String,
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

    /// True for errors caused by bad user input (config, flags, missing
    /// files named by the config) rather than a failure during a run.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config(_) | Error::InvalidEps(_) => true,
            Error::Run { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
