//! I-projection onto a linear half-space of the simplex.
//!
//! Every exponent in this crate is an instance of
//!
//! ```text
//! min D(Q || P)  subject to  Σ Q(x) a(x) >= t
//! ```
//!
//! whose minimizer is the exponential tilt `Q_λ ∝ P e^{λ a}` with `λ >= 0`
//! chosen so the constraint is active (or `λ = 0` when `P` is already
//! feasible). The dual is `max_{λ >= 0} λ t - log Σ P e^{λ a}`.

use crate::error::{Error, Result};
use crate::numeric::{bisect_increasing, log_sum_exp};
use crate::simplex::{check_dims, dot, kl_unchecked, tilt_with, Distribution, ToleranceConfig};

/// Maximum number of bracket doublings for the tilt parameter.
pub const MAX_DOUBLINGS: usize = 60;

/// `{Q : Σ Q(x) coef(x) >= level}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub coef: Vec<f64>,
    pub level: f64,
}

impl HalfSpace {
    pub fn new(coef: Vec<f64>, level: f64) -> Self {
        Self { coef, level }
    }

    /// The complementary orientation `{Q : Σ Q coef <= level}` written as a
    /// `>=` constraint.
    pub fn flipped(&self) -> Self {
        Self {
            coef: self.coef.iter().map(|c| -c).collect(),
            level: -self.level,
        }
    }

    pub fn mean(&self, q: &[f64]) -> f64 {
        dot(q, &self.coef)
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        self.mean(q) >= self.level
    }

    pub fn sup(&self) -> f64 {
        self.coef.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `D(q || base)`.
    pub value: f64,
    pub q: Distribution,
    pub lambda: f64,
    /// Whether the constraint binds (`false` means `base` was feasible).
    pub active: bool,
}

/// Grows `cap` geometrically until `increasing(cap) >= 0`.
pub(crate) fn bracket_upper<F>(mut increasing: F, what: &str) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut cap = 1.0;
    for _ in 0..=MAX_DOUBLINGS {
        if increasing(cap) >= 0.0 {
            return Ok(cap);
        }
        cap *= 2.0;
    }
    Err(Error::NonConvergence {
        iterations: MAX_DOUBLINGS,
        detail: format!("could not bracket {what} below 2^{MAX_DOUBLINGS}"),
        last_iterate: vec![cap],
        residuals: vec![increasing(cap)],
    })
}

pub fn project(base: &Distribution, hs: &HalfSpace, tol: &ToleranceConfig) -> Result<Projection> {
    check_dims(base.alphabet_size(), hs.coef.len())?;
    if hs.contains(base.probs()) {
        return Ok(Projection {
            value: 0.0,
            q: base.clone(),
            lambda: 0.0,
            active: false,
        });
    }
    let sup = hs.sup();
    if hs.level >= sup {
        return Err(Error::Unbounded {
            level: hs.level,
            sup,
        });
    }
    let residual = |lambda: f64| hs.mean(tilt_with(base, &hs.coef, lambda).probs()) - hs.level;
    let cap = bracket_upper(residual, "the tilt parameter").map_err(|_| Error::Unbounded {
        level: hs.level,
        sup,
    })?;
    let root = bisect_increasing(residual, 0.0, cap, tol.max_iter.max(MAX_DOUBLINGS + 64));
    if root.residual.abs() > tol.abs_tol {
        return Err(Error::NonConvergence {
            iterations: root.iterations,
            detail: "tilt residual above tolerance".into(),
            last_iterate: vec![root.x],
            residuals: vec![root.residual],
        });
    }
    let q = tilt_with(base, &hs.coef, root.x);
    Ok(Projection {
        value: kl_unchecked(q.probs(), base.probs()),
        q,
        lambda: root.x,
        active: true,
    })
}

/// Maximizer and value of the concave dual `λ t - log Σ base e^{λ a}` over
/// `λ >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSolution {
    pub value: f64,
    pub lambda: f64,
}

pub fn dual(base: &Distribution, hs: &HalfSpace, tol: &ToleranceConfig) -> Result<DualSolution> {
    check_dims(base.alphabet_size(), hs.coef.len())?;
    let log_base = base.log_probs();
    let objective = |lambda: f64| {
        let terms: Vec<f64> = log_base
            .iter()
            .zip(&hs.coef)
            .map(|(l, a)| l + lambda * a)
            .collect();
        lambda * hs.level - log_sum_exp(&terms)
    };
    // Derivative of the objective is `t - E_{Q_λ}[a]`, nonincreasing in λ.
    let neg_slope = |lambda: f64| hs.mean(tilt_with(base, &hs.coef, lambda).probs()) - hs.level;
    if neg_slope(0.0) >= 0.0 {
        // `log Σ base = 0` for a normalized base.
        return Ok(DualSolution {
            value: 0.0,
            lambda: 0.0,
        });
    }
    let sup = hs.sup();
    if hs.level >= sup {
        return Err(Error::Unbounded {
            level: hs.level,
            sup,
        });
    }
    let cap = bracket_upper(neg_slope, "the dual maximizer")?;
    let root = bisect_increasing(neg_slope, 0.0, cap, tol.max_iter.max(MAX_DOUBLINGS + 64));
    Ok(DualSolution {
        value: objective(root.x),
        lambda: root.x,
    })
}
