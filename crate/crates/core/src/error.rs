use thiserror::Error;

/// Errors raised by the simulation engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller supplied an argument outside the operation's domain.
    #[error("invalid input: {0}")]
    Input(String),
    /// Operations were combined in an order the engine cannot honour.
    #[error("usage error: {0}")]
    Usage(String),
    /// The fringe fit failed to converge.
    #[error("fit error: {message} (iterations: {iterations}, last period: {last_period:e} m)")]
    Fit {
        message: String,
        iterations: usize,
        last_period: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        input(format!("{name} must be finite, got {value}"))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        input(format!("{name} must be positive and finite, got {value}"))
    }
}
