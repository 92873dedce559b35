//! Matched likelihood ratio test exponents.
//!
//! For the test `decide 2 iff D(T || P1) - D(T || P2) >= γ` the type-I and
//! type-II exponents are I-projections of `P1` and `P2` onto the two
//! half-spaces cut by the threshold. Inside `[-D(P1||P2), D(P2||P1)]` both
//! projections land on the same geometric mixture `Q_λ ∝ P1^{1-λ} P2^λ`.

use serde::{Deserialize, Serialize};

use crate::error::{Endpoint, Error, Result};
use crate::numeric::bisect_increasing;
use crate::projection::{dual, project, HalfSpace};
use crate::simplex::{check_dims, kl, llr_coefficients, tilt_with, Distribution, ToleranceConfig};

/// `[-D(P1||P2), D(P2||P1)]`, the thresholds for which both exponents are
/// attained by the common tilted distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRange {
    pub lo: f64,
    pub hi: f64,
}

impl ThresholdRange {
    pub fn new(p1: &Distribution, p2: &Distribution) -> Result<Self> {
        Ok(Self {
            lo: -kl(p1, p2)?,
            hi: kl(p2, p1)?,
        })
    }

    pub fn contains(&self, gamma: f64) -> bool {
        (self.lo..=self.hi).contains(&gamma)
    }

    pub fn check(&self, gamma: f64) -> Result<()> {
        let endpoint = if gamma < self.lo {
            Endpoint::Lower
        } else if gamma > self.hi {
            Endpoint::Upper
        } else if gamma.is_nan() {
            return Err(Error::Argument("threshold is NaN".into()));
        } else {
            return Ok(());
        };
        Err(Error::OutOfRange {
            value: gamma,
            lo: self.lo,
            hi: self.hi,
            endpoint,
        })
    }

    /// `lo + u (hi - lo)`.
    pub fn lerp(&self, u: f64) -> f64 {
        self.lo + u * (self.hi - self.lo)
    }
}

/// A type-I/type-II exponent pair together with the achieving distributions.
///
/// `lambda1` is the tilt of `q1` away from `P1` and `lambda2` the tilt of
/// `q2` away from `P2`, i.e. the two Lagrange multipliers. In the matched
/// in-range case `lambda1 + lambda2 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub e1: f64,
    pub e2: f64,
    pub q1: Distribution,
    pub q2: Distribution,
    pub lambda1: f64,
    pub lambda2: f64,
}

fn require_distinct(p1: &Distribution, p2: &Distribution) -> Result<()> {
    check_dims(p1.alphabet_size(), p2.alphabet_size())?;
    if p1 == p2 {
        return Err(Error::Argument(
            "the two hypotheses coincide; the tilt is constant".into(),
        ));
    }
    Ok(())
}

/// Solves `D(Q_λ||P1) - D(Q_λ||P2) = γ` for `λ ∈ [0, 1]`.
pub fn solve_lambda_matched(p1: &Distribution, p2: &Distribution, gamma: f64) -> Result<f64> {
    solve_lambda_matched_with(p1, p2, gamma, &ToleranceConfig::default())
}

pub fn solve_lambda_matched_with(
    p1: &Distribution,
    p2: &Distribution,
    gamma: f64,
    tol: &ToleranceConfig,
) -> Result<f64> {
    require_distinct(p1, p2)?;
    ThresholdRange::new(p1, p2)?.check(gamma)?;
    let coef = llr_coefficients(p1, p2)?;
    let hs = HalfSpace::new(coef, gamma);
    let root = bisect_increasing(
        |l| hs.mean(tilt_with(p1, &hs.coef, l).probs()) - gamma,
        0.0,
        1.0,
        tol.max_iter,
    );
    if root.residual.abs() > tol.abs_tol {
        return Err(Error::NonConvergence {
            iterations: root.iterations,
            detail: "matched tilt residual above tolerance".into(),
            last_iterate: vec![root.x],
            residuals: vec![root.residual],
        });
    }
    Ok(root.x)
}

fn half_spaces(p1: &Distribution, p2: &Distribution, gamma: f64) -> Result<(HalfSpace, HalfSpace)> {
    let first = HalfSpace::new(llr_coefficients(p1, p2)?, gamma);
    let second = first.flipped();
    Ok((first, second))
}

/// Type-I and type-II exponents of the matched test with threshold `γ`.
///
/// Thresholds below the range give `e1 = 0` with `q1 = P1`, thresholds
/// above give `e2 = 0` with `q2 = P2`. Beyond the extreme per-symbol
/// log-likelihood ratios the opposite exponent is unbounded and an
/// [`Error::Unbounded`] is returned.
pub fn matched_exponents(p1: &Distribution, p2: &Distribution, gamma: f64) -> Result<ExponentPair> {
    matched_exponents_with(p1, p2, gamma, &ToleranceConfig::default())
}

pub fn matched_exponents_with(
    p1: &Distribution,
    p2: &Distribution,
    gamma: f64,
    tol: &ToleranceConfig,
) -> Result<ExponentPair> {
    let (first, second) = half_spaces(p1, p2, gamma)?;
    let a = project(p1, &first, tol)?;
    let b = project(p2, &second, tol)?;
    Ok(ExponentPair {
        e1: a.value,
        e2: b.value,
        q1: a.q,
        q2: b.q,
        lambda1: a.lambda,
        lambda2: b.lambda,
    })
}

/// `max_{λ>=0} λγ - log Σ P1^{1-λ} P2^λ`.
pub fn dual_exponent_1(p1: &Distribution, p2: &Distribution, gamma: f64) -> Result<f64> {
    let (first, _) = half_spaces(p1, p2, gamma)?;
    Ok(dual(p1, &first, &ToleranceConfig::default())?.value)
}

/// `max_{λ>=0} -λγ - log Σ P1^λ P2^{1-λ}`.
pub fn dual_exponent_2(p1: &Distribution, p2: &Distribution, gamma: f64) -> Result<f64> {
    let (_, second) = half_spaces(p1, p2, gamma)?;
    Ok(dual(p2, &second, &ToleranceConfig::default())?.value)
}

/// Best type-II exponent when the type-I error is held at a constant level:
/// `D(P1 || P2)`.
pub fn stein_matched(p1: &Distribution, p2: &Distribution) -> Result<f64> {
    kl(p1, p2)
}
