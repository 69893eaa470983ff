use thiserror::Error;

/// Errors raised by the solver, the oracles and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model parameter violates its admissible range.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The trading problem has unbounded value for these parameters.
    #[error("problem is ill-posed (beta = {beta}, alpha = {alpha}): buy-and-hold value is unbounded")]
    IllPosed { alpha: f64, beta: f64 },

    /// The operation is only defined in a different entry regime.
    #[error("regime error: {0}")]
    Regime(String),

    /// The requested case is deliberately not implemented.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A root could not be bracketed or an evaluation produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Reading or writing a report failed.
    #[error("serialization error: {0}")]
    Serialization(String),

    /// The oracle grid cannot resolve the requested quantity.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
