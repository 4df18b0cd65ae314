//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside the domain an operation is defined on
    /// (out-of-range antenna index, non-positive range, zero AGC power, ...).
    #[error("input domain error: {0}")]
    InputDomain(String),

    /// Vector or matrix dimensions do not line up.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// The effective LNA gain is zero; estimators divide by it.
    #[error("degenerate hardware: effective gain is zero")]
    DegenerateHardware,

    /// A numerical routine failed to produce a usable result.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A serialized payload is inconsistent (bin coordinates out of range,
    /// duplicate bins, bad magic/version, ...).
    #[error("corrupt payload: {0}")]
    PayloadCorrupt(String),

    /// The experiment configuration is invalid.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A sweep cell failed; identifies which one.
    #[error("cell {n_h}x{n_v} at {spacing_wl} wavelengths spacing failed: {source}")]
    Cell {
        n_h: usize,
        n_v: usize,
        spacing_wl: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input<S: Into<String>>(msg: S) -> Self {
        Error::InputDomain(msg.into())
    }

    pub(crate) fn config<S: Into<String>>(msg: S) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// Attach sweep-cell context to an error bubbling out of a trial.
    pub(crate) fn in_cell(self, n_h: usize, n_v: usize, spacing_wl: f64) -> Self {
        Error::Cell {
            n_h,
            n_v,
            spacing_wl,
            source: Box::new(self),
        }
    }

    /// True for errors caused by a bad configuration rather than a failure
    /// at run time; the CLI maps these to a distinct exit code.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidConfig(_) | Error::Json(_) => true,
            Error::Cell { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
