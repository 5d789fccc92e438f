use thiserror::Error;

/// Errors raised while configuring or evaluating the clock model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates an invariant. `field` names the offending key.
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("failed to parse configuration: {0}")]
    Parse(String),

    /// An argument is outside the domain of the operation.
    #[error("argument out of domain: {0}")]
    Domain(String),

    /// A requested evaluation point lies outside the sampled grid.
    #[error("{what} = {value} lies outside the grid [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Fringe phase fit could not be performed.
    #[error("degenerate fringe fit: {0}")]
    DegenerateFit(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::DegenerateFit(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
