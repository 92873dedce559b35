use thiserror::Error;

/// Which end of an admissible interval a value fell outside of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Lower,
    Upper,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} symbols, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("threshold {value} outside [{lo}, {hi}] ({endpoint:?} endpoint violated)")]
    OutOfRange {
        value: f64,
        lo: f64,
        hi: f64,
        endpoint: Endpoint,
    },

    /// The half-space `{Q : E_Q[a] >= level}` contains no strictly positive
    /// distribution, so the tilt parameter would have to diverge.
    #[error("unbounded tilt: level {level} is not below the supremum {sup} of the statistic")]
    Unbounded { level: f64, sup: f64 },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations: {detail}")]
    NonConvergence {
        iterations: usize,
        detail: String,
        last_iterate: Vec<f64>,
        residuals: Vec<f64>,
    },

    #[error("enumeration budget exceeded: {count} compositions > {budget}")]
    Budget { count: u128, budget: u128 },

    #[error("cancelled")]
    Cancelled,
}

pub type Result<T> = std::result::Result<T, Error>;
