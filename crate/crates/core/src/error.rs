use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A formula was evaluated outside its domain (negative delay, flow or cost).
    #[error("{op}: {what} must be non-negative, got {value}")]
    Domain {
        op: &'static str,
        what: &'static str,
        value: f64,
    },

    #[error("invalid scenario: `{field}` {constraint}")]
    Validation { field: String, constraint: String },

    #[error("could not parse scenario: {0}")]
    Parse(String),

    #[error("cannot read scenario {}", path.display())]
    ScenarioRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o failure on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The root of a monotone map could not be enclosed. `attempts` holds
    /// the `(x, f(x))` pairs that were tried.
    #[error("failed to bracket the root of {what}; attempts: {attempts:?}")]
    Bracket {
        what: &'static str,
        attempts: Vec<(f64, f64)>,
    },

    #[error("{what} did not converge in {iterations} iterations; residuals {residuals:?}")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residuals: Vec<f64>,
    },

    /// A solved pattern failed its post-hoc equilibrium check.
    #[error("equilibrium check failed: {0}")]
    Deviation(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    /// True for problems with the user's input (bad file, bad value).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. } | Error::Parse(_) | Error::ScenarioRead { .. }
        )
    }

    pub fn is_io_error(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
