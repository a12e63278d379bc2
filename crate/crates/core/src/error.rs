use thiserror::Error;

/// Errors raised by the simulation and numerics layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state {state} for {variant} chain")]
    InvalidState { state: u64, variant: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("start and target are both {0}")]
    StartEqualsTarget(u64),

    #[error("target {target} is not reachable from {start}")]
    Unreachable { start: u64, target: u64 },

    #[error("death is forbidden when a single type is alive")]
    ForbiddenDeath,

    #[error("step {step} too large: 1 - h*k(0)/2 = {denominator} is not positive")]
    StepTooLarge { step: f64, denominator: f64 },

    #[error("step {step} is outside the stability region (spectral bound {spectral_bound}); try step <= {suggested}")]
    UnstableStep {
        step: f64,
        spectral_bound: f64,
        suggested: f64,
    },

    #[error("{what} = {requested} exceeds grid horizon {horizon}")]
    BeyondHorizon {
        what: &'static str,
        requested: f64,
        horizon: f64,
    },

    #[error("transform denominator 1 - K(s) = {0} is not positive")]
    NonPositiveDenominator(f64),

    #[error("evaluation at s = {s} is unreliable: tail share {tail_share}")]
    UnreliableTail { s: f64, tail_share: f64 },

    #[error("invalid configuration ({}): {}", keys.join(", "), details.join("; "))]
    Config { keys: Vec<String>, details: Vec<String> },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
