use std::io;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("center ({x}, {y}) out of bounds for {width}x{height} image")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },

    #[error("empty kernel support")]
    EmptyKernelSupport,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("histogram scheme mismatch: {left} bins vs {right} bins")]
    SchemeMismatch { left: usize, right: usize },

    #[error("training set must contain both classes")]
    SingleClass,

    #[error("solver did not converge within {0} iterations")]
    NonConvergence(usize),

    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("non-finite value encountered during {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

impl Error {
    pub(crate) fn malformed(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Malformed {
            what,
            detail: detail.into(),
        }
    }
}
