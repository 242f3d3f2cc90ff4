use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent shapes or an invalid architecture/configuration value.
    #[error("configuration error: {0}")]
    Config(String),

    /// A config field failed validation.
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    /// Config text could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Config text names a key the schema does not know.
    #[error("unknown key `{key}` at line {line}, column {column}")]
    UnknownKey {
        key: String,
        line: usize,
        column: usize,
    },

    /// Input outside the mathematical domain of an operation (e.g. a target
    /// that is not a probability vector).
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A forward pass produced a NaN or infinity.
    #[error("non-finite value in layer {layer}")]
    NumericOverflow { layer: usize },

    /// An integrator state became non-finite.
    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },

    #[error("step size underflow at t = {time}")]
    StepUnderflow { time: f64 },

    #[error("empty trace")]
    EmptyTrace,

    #[error("quadrature did not converge: successive refinements differ by {gap:e}")]
    Quadrature { gap: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit status: 2 for configuration problems, 3 for numeric
    /// failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Validation { .. }
            | Error::Parse { .. }
            | Error::UnknownKey { .. }
            | Error::Precondition(_)
            | Error::Domain(_) => 2,
            Error::NumericOverflow { .. }
            | Error::NonFinite { .. }
            | Error::StepUnderflow { .. }
            | Error::EmptyTrace
            | Error::Quadrature { .. } => 3,
            Error::Io { .. } => 4,
            Error::Context { source, .. } => source.exit_code(),
        }
    }

    /// Short machine-readable class name.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Validation { .. } => "validation",
            Error::Parse { .. } => "parse",
            Error::UnknownKey { .. } => "unknown_key",
            Error::Domain(_) => "domain",
            Error::Precondition(_) => "precondition",
            Error::NumericOverflow { .. } => "numeric_overflow",
            Error::NonFinite { .. } => "non_finite",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::EmptyTrace => "empty_trace",
            Error::Quadrature { .. } => "quadrature",
            Error::Io { .. } => "io",
            Error::Context { source, .. } => source.class(),
        }
    }
}
