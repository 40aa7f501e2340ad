use thiserror::Error;

/// Errors raised by the model, estimation and pricing routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate denominator: {0} is within tolerance of zero")]
    DegenerateDenominator(&'static str),

    #[error("invalid moments: m1 = {m1}, m2 = {m2} (need m1 > 0 and m2 >= m1^2)")]
    InvalidMoments { m1: f64, m2: f64 },

    #[error("delay {tau} is not an integer multiple of the step {step}")]
    MisalignedDelay { tau: f64, step: f64 },

    #[error("misaligned grid: {0}")]
    MisalignedGrid(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("singular regression: {0}")]
    SingularRegression(String),
}

impl ModelError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        ModelError::InvalidParameter { name, reason: reason.into() }
    }

    /// True for errors caused by malformed inputs rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            ModelError::DegenerateDenominator(_)
                | ModelError::NonFinite(_)
                | ModelError::SingularRegression(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
