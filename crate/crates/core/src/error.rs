use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The hazard rate is undefined because the survival function vanishes.
    #[error("hazard rate is singular at t = {t} (survival function is zero)")]
    Singularity { t: f64 },

    /// Adaptive quadrature hit its refinement limit before meeting tolerance.
    #[error("quadrature did not converge: estimate {estimate}, error estimate {error_estimate}")]
    NonConvergence { estimate: f64, error_estimate: f64 },

    /// A value object (prize schedule, parameters) violates its invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// Marginal benefit exceeds what the cost function can match on [0, x_bar].
    #[error("marginal benefit {marginal} exceeds c'(x_bar) = {max_marginal}")]
    Range { marginal: f64, max_marginal: f64 },

    /// A textual spec (distribution, prize, cost) could not be parsed.
    #[error("cannot parse {field}: {message}")]
    Parse { field: String, message: String },
}

impl Error {
    pub(crate) fn parse(field: &str, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
