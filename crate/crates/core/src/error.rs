use std::path::PathBuf;

/// Errors returned by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A delimited input file did not have the expected shape (missing
    /// header, unreadable record).
    #[error("format error: {0}")]
    Format(String),

    /// A value in an input file failed a domain check. `line` is 1-based
    /// and counts the header as line 1.
    #[error("line {line}: {message}")]
    Validation { line: u64, message: String },

    /// A domain invariant was violated by a caller-constructed value.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A series does not have enough history to yield a trainable row.
    #[error("insufficient history: {days} days available, at least {required} required")]
    InsufficientHistory { days: usize, required: usize },

    /// A precondition of an operation was not met.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Cross-validation or search configuration cannot be satisfied.
    #[error("configuration error: {0}")]
    Config(String),

    /// Alternating minimization did not reach its tolerance.
    #[error("fit did not converge after {iterations} iterations (objective {objective})")]
    NotConverged { iterations: usize, objective: f64 },

    /// Every cross-validation split failed to train.
    #[error("all {0} cross-validation splits failed")]
    AllSplitsFailed(usize),

    /// A tuning checkpoint could not be trusted.
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(line: u64, message: impl Into<String>) -> Self {
        Error::Validation { line, message: message.into() }
    }

    /// Whether the error stems from user-supplied input rather than an
    /// internal failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_)
                | Error::Validation { .. }
                | Error::Invalid(_)
                | Error::InsufficientHistory { .. }
                | Error::Config(_)
                | Error::Checkpoint { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
