use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{param}`: {reason}")]
    InvalidArgument { param: &'static str, reason: String },

    #[error("unsupported sequence: {0}")]
    UnsupportedSequence(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("basis dimension {dimension} exceeds the configured cap {cap}")]
    CapacityExceeded { dimension: u128, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(param: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        param,
        reason: reason.into(),
    }
}

/// Rejects NaN and infinities.
pub(crate) fn finite(param: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(param, format!("must be finite, got {value}")))
    }
}

pub(crate) fn positive(param: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(param, format!("must be positive, got {value}")))
    }
}

pub(crate) fn non_negative(param: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(invalid(param, format!("must be non-negative, got {value}")))
    }
}
