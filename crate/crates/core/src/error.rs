use thiserror::Error;

/// Errors raised while building models or running experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("system saturated: utilization {rho:.6} >= 1")]
    Saturated { rho: f64 },

    #[error("duration {duration} is not a multiple of the slot length {slot}")]
    SlotMisaligned { duration: f64, slot: f64 },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
