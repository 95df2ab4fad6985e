//! Error type shared by the whole toolkit.

use std::path::PathBuf;

/// Errors produced by the library and the experiment harness.
///
/// The CLI maps these onto process exit codes: configuration and
/// parameter problems exit with 2, I/O problems with 3, and numerical
/// failures (non-convergence, degenerate inputs) with 4.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A function precondition was violated (bad argument value).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An experiment configuration failed validation.
    #[error("configuration error: {0}")]
    Config(String),

    /// A frequency query fell outside an absorption table's coverage.
    #[error("frequency {frequency_hz} Hz outside table coverage [{min_hz} Hz, {max_hz} Hz]")]
    OutOfCoverage {
        frequency_hz: f64,
        min_hz: f64,
        max_hz: f64,
    },

    /// An iterative method failed to converge or hit a degenerate state.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Failure reading or writing a file.
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) => 2,
            Error::File { .. } | Error::Io(_) | Error::Csv(_) => 3,
            Error::OutOfCoverage { .. } | Error::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
