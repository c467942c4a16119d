use thiserror::Error;

/// Errors raised by the channel model, the transceiver solvers, and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("{context}: system matrix is numerically singular (condition estimate {condition:e})")]
    Singular { context: &'static str, condition: f64 },

    #[error("config line {line}: key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("unknown experiment `{0}` (expected ber-vs-snr, mse-vs-w or convergence)")]
    UnknownExperiment(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// I/O, 1 for anything raised while simulating.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::UnknownExperiment(_) => 2,
            Error::Io { .. } | Error::Csv(_) => 3,
            _ => 1,
        }
    }
}
