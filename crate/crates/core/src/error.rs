use thiserror::Error;

/// Errors raised by the domain types and the pure evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("{what} = {value} is outside its domain ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

impl ChannelError {
    pub(crate) fn domain(what: &'static str, value: f64, expected: &'static str) -> Self {
        ChannelError::Domain {
            what,
            value,
            expected,
        }
    }
}

/// Errors raised by the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("no delay bin meets the occupancy threshold ({required} of {positions} positions); per-bin valid counts: {counts:?}")]
    NoOccupiedBins {
        required: usize,
        positions: usize,
        counts: Vec<usize>,
    },
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Errors raised while generating channels and tracks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error("no taps given")]
    NoTaps,
    #[error("taps {first} and {second} share delay bin {bin} (bin width {bin_width_s} s)")]
    DuplicateDelayBin {
        bin: usize,
        first: usize,
        second: usize,
        bin_width_s: f64,
    },
    #[error("tap {index}: {reason}")]
    InvalidTap { index: usize, reason: String },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Errors raised while reading or writing files.
#[derive(Debug, Error)]
pub enum PersistenceError {
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format_version `{found}` (expected `{expected}`)")]
    Version { found: String, expected: &'static str },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("report: {0}")]
    Report(String),
    #[error("plot data: {0}")]
    Plot(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

impl PersistenceError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        PersistenceError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = ChannelError> = std::result::Result<T, E>;
