use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{location}: {message}")]
    Format { location: String, message: String },

    #[error("spectrum has {len} channels, at least {min} are required")]
    TooShort { len: usize, min: usize },

    #[error("invalid channel range [{a}, {b}]: {reason}")]
    InvalidRange { a: i64, b: i64, reason: String },

    #[error("knot spacing {spacing} at level {level} is below one channel")]
    SpacingTooFine { level: u32, spacing: f64 },

    #[error("basis index {index} out of range (basis count {count})")]
    Index { index: usize, count: usize },

    #[error("abscissa {x} lies outside the fitted range [{a}, {b}]")]
    OutOfRange { x: f64, a: f64, b: f64 },

    #[error("Gram matrix is not positive definite ({basis_count} basis functions over {channels} channels)")]
    RankDeficient { basis_count: usize, channels: usize },

    #[error("channel range [{a}, {b}] does not fit a spectrum of {len} channels")]
    RangeMismatch { a: usize, b: usize, len: usize },

    #[error("range admits only {levels} refinement level(s), at least 2 are required")]
    RangeTooNarrow { levels: usize },

    #[error("level {level}: {source}")]
    Level {
        level: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("selection needs {needed} epsilon value(s), trace has {available}")]
    NotEnoughLevels { needed: usize, available: usize },

    #[error("unknown kernel {0:?} (expected wavg3 or wavg5)")]
    UnknownKernel(String),

    #[error("spectrum of {len} channels is shorter than the kernel ({kernel} taps)")]
    SpectrumTooShort { len: usize, kernel: usize },

    #[error("invalid peak: {0}")]
    InvalidPeak(String),

    #[error("invalid background: {0}")]
    InvalidBackground(String),

    #[error("spectra differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("no peak inside window [{a}, {b}]: {reason}")]
    NoPeak { a: usize, b: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn at_level(self, level: u32) -> Self {
        Error::Level {
            level,
            source: Box::new(self),
        }
    }
}
