use thiserror::Error;

use crate::polar::Spin;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite parameter `{name}` = {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("parameter `{name}` = {value} out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("antisqueezing ({anti_db} dB) below squeezing ({sq_db} dB) would need negative thermal occupation")]
    NegativeOccupation { sq_db: f64, anti_db: f64 },

    #[error("malformed angular momentum: {0}")]
    MalformedSpin(String),

    #[error("matrix is not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("grid exactness {available} too low for spin {spin}, need at least {required}")]
    GridTooCoarse { spin: Spin, required: u32, available: u32 },

    #[error("polarization sector captures only {captured} of the probability (need > 0.5)")]
    UnderCaptured { captured: f64 },

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status: 1 configuration, 2 numerical guard, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite { .. }
            | Error::OutOfRange { .. }
            | Error::NegativeOccupation { .. }
            | Error::MalformedSpin(_)
            | Error::Config(_) => 1,
            Error::InvalidState(_)
            | Error::Dimension(_)
            | Error::GridTooCoarse { .. }
            | Error::UnderCaptured { .. } => 2,
            Error::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { name, value })
    }
}
