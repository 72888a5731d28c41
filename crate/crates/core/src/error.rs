use thiserror::Error;

/// Errors raised by the geometry, length, target and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violated its documented domain. `field` names the offender.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    /// An index went past what a rule can evaluate (table end, block end, f64 range).
    #[error("index out of range: {0}")]
    OutOfRange(String),

    /// No schedule index satisfying the block conditions exists below the cap.
    #[error("schedule search failed at block {block}: {reason}")]
    ScheduleSearch { block: usize, reason: String },

    /// An internal consistency check failed.
    #[error("assertion failed: {0}")]
    Assertion(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
