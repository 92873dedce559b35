//! Error exponents of matched and mismatched likelihood ratio tests between
//! distributions on a finite alphabet, their worst case over KL balls around
//! the test distributions, and brute-force checks.
//!
//! All divergences and exponents are in nats.

pub mod cli;
pub mod error;
pub mod lrt;
pub mod mismatch;
pub mod numeric;
pub mod oracle;
pub mod projection;
pub mod sensitivity;
pub mod simplex;
pub mod worst_case;

pub use error::{Error, Result};
pub use lrt::{matched_exponents, ExponentPair, ThresholdRange};
pub use mismatch::{MismatchedExponent, MismatchedTest};
pub use sensitivity::{QuadraticModel, SensitivityReport};
pub use simplex::{kl, Distribution, EmpiricalType, ToleranceConfig};
pub use worst_case::{Hypothesis, KlBall, WorstCaseSolution, WorstCaseSolver};
