use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while configuring or running a scenario.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed, missing or out-of-range configuration value.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// Demand or parameters fall outside the congested regime the model
    /// assumes (`q1 < c1`, `q1 + q2 > c1`, ...).
    #[error("scenario assumption violated: {0}")]
    Assumption(String),

    /// A controller could not produce a finite price.
    #[error("price undefined: {0}")]
    PriceUndefined(String),

    /// Bisection endpoints classify to the same convergence pattern.
    #[error("phase boundary not bracketed: both ends of [{low}, {high}] classify as {pattern}")]
    NotBracketed {
        low: f64,
        high: f64,
        pattern: String,
    },

    /// Failure inside a closed-loop run, tagged with the step it happened at.
    #[error("step {step} (t = {t:.6} min): {source}")]
    AtStep {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// The innermost error, with any step annotation stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}
