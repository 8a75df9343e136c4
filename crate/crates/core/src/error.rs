use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or experiment parameter violates a required inequality.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument is outside the domain of an operation (shape mismatch, bad order, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The signal model cannot take another step from the current state.
    #[error("model infeasible: {0}")]
    ModelInfeasible(String),

    /// The ε-ball around `y` does not intersect the range of `A`.
    #[error("infeasible constraint: minimum residual {min_residual:.6e} exceeds eps {eps:.6e}")]
    Infeasible { min_residual: f64, eps: f64 },

    /// A closed-form bound was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A bound or certificate needs restricted isometry/orthogonality constants that were not computed.
    #[error("missing matrix constants: {}", .0.join(", "))]
    MissingConstants(Vec<String>),

    /// Exhaustive subset enumeration would exceed the configured budget.
    #[error("enumeration limit: {subsets} subsets exceeds budget {budget}")]
    EnumerationLimit { subsets: u128, budget: u128 },

    #[error("no LS-step error data recorded")]
    NoSpreadData,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse { path: path.into(), message: message.to_string() }
    }

    /// Whether this error stems from user-supplied configuration rather than I/O.
    pub fn is_config(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
