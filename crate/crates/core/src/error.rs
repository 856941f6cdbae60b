use thiserror::Error;

/// Errors raised while building group models or evaluating operations on them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtpError {
    #[error("cannot parse `{input}`: {reason}")]
    SpecParse { input: String, reason: String },

    #[error("{what} needs {requested}, which exceeds the cap of {cap}")]
    Resource {
        what: String,
        requested: usize,
        cap: usize,
    },

    #[error("window leak: {fraction:.3e} of the mass leaves the truncation window (threshold {threshold:.1e})")]
    WindowLeak { fraction: f64, threshold: f64 },

    #[error("functions live on different group models ({left} vs {right})")]
    ModelMismatch { left: String, right: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("group `{0}` is not a declared product of cyclic groups")]
    NotAbelian(String),

    #[error("function is not positive: {0}")]
    NotPositive(String),

    #[error("grid step {step} cannot resolve a neighbourhood of measure below {target}")]
    GridTooCoarse { step: f64, target: f64 },

    #[error("box half-width {required} is needed but the window only allows {available}")]
    WindowTooSmall { required: usize, available: usize },

    #[error("invalid exponent p = {0}; expected a finite p >= 1")]
    InvalidExponent(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model validation failed: {0}")]
    ModelValidation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl LtpError {
    pub(crate) fn parse(input: &str, reason: impl Into<String>) -> Self {
        LtpError::SpecParse {
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for LtpError {
    fn from(err: std::io::Error) -> Self {
        LtpError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LtpError>;
