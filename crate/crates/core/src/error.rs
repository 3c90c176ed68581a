use thiserror::Error;

/// Errors raised by the model, the integrators and the analysis layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("degenerate event rates: f(x) + mu(x) y = 0 at x = {x}, y = {y}")]
    DegenerateRates { x: f64, y: f64 },

    #[error("jump step requires at least one prey individual (n = 0 at t = {t})")]
    PreyAbsorbed { t: f64 },

    #[error(
        "expected {expected:.3e} events exceeds the budget of {budget:.3e}; \
         use the diffusion or hybrid integrator for this population scale"
    )]
    EventBudget { expected: f64, budget: f64 },

    #[error("non-finite state at t = {t}: x = {x}, y = {y}")]
    NonFinite { t: f64, x: f64, y: f64 },

    #[error("{0}")]
    Domain(String),

    #[error("mortality schedule is time-varying; {0} needs a constant m")]
    NonConstantMortality(&'static str),

    #[error("no limit cycle: {0}")]
    NoCycle(String),

    #[error("invalid bracket [{lo}, {hi}]: {reason}")]
    BracketInvalid { lo: f64, hi: f64, reason: String },

    #[error("no local minimum of prey before t = {horizon}")]
    NoMinimum { horizon: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        reason: reason.into(),
    }
}
