//! Small-radius behavior of the worst-case exponents.
//!
//! For a test with tilt `Q̂_λ` between `p̂1` and `p̂2`, the worst-case
//! exponent over a ball of radius `R` around `p̂i` decays as
//! `Êi - Si √R + o(√R)` with `Si² = 2 χ²(Q̂_λ || p̂i)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lrt::{solve_lambda_matched, ThresholdRange};
use crate::mismatch::{mismatched_exponent_1, mismatched_exponent_2, MismatchedTest};
use crate::simplex::{chi_squared, dot, kl, tilt, Distribution};
use crate::worst_case::Hypothesis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub s1: f64,
    pub s2: f64,
    pub lambda: f64,
    pub q_tilt: Distribution,
    /// Exponents at zero radius.
    pub e1: f64,
    pub e2: f64,
}

impl SensitivityReport {
    pub fn coefficient(&self, hyp: Hypothesis) -> f64 {
        match hyp {
            Hypothesis::First => self.s1,
            Hypothesis::Second => self.s2,
        }
    }

    pub fn exponent(&self, hyp: Hypothesis) -> f64 {
        match hyp {
            Hypothesis::First => self.e1,
            Hypothesis::Second => self.e2,
        }
    }
}

/// Sensitivity coefficients of the test `(p̂1, p̂2, γ̂)`.
///
/// At the ends of the threshold range the tilt coincides with one of the
/// test distributions and that side's coefficient is 0.
pub fn sensitivity_coefficients(
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    gamma: f64,
) -> Result<SensitivityReport> {
    let lambda = solve_lambda_matched(p_hat1, p_hat2, gamma)?;
    let q = tilt(p_hat1, p_hat1, p_hat2, lambda)?;
    Ok(SensitivityReport {
        s1: (2.0 * chi_squared(&q, p_hat1)?).sqrt(),
        s2: (2.0 * chi_squared(&q, p_hat2)?).sqrt(),
        e1: kl(&q, p_hat1)?,
        e2: kl(&q, p_hat2)?,
        lambda,
        q_tilt: q,
    })
}

/// `Êi - Si √R` without clamping. Negative for large enough `R`.
pub fn taylor_worst_case_raw(
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    gamma: f64,
    radius: f64,
    hyp: Hypothesis,
) -> Result<f64> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Argument(format!(
            "radius must be finite and >= 0, got {radius}"
        )));
    }
    let rep = sensitivity_coefficients(p_hat1, p_hat2, gamma)?;
    Ok(rep.exponent(hyp) - rep.coefficient(hyp) * radius.sqrt())
}

/// `max(0, Êi - Si √R)`.
pub fn taylor_worst_case(
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    gamma: f64,
    radius: f64,
    hyp: Hypothesis,
) -> Result<f64> {
    Ok(taylor_worst_case_raw(p_hat1, p_hat2, gamma, radius, hyp)?.max(0.0))
}

/// Linearized exponent minimized over the local quadratic (Fisher) ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticModel {
    /// `1 / p̂(x)`.
    pub fisher_diag: Vec<f64>,
    /// `-Q̂_λ(x) / p̂(x)`, the gradient of the exponent in the generating
    /// distribution.
    pub gradient: Vec<f64>,
    /// Gradient centered in the Fisher metric and mapped back by `J⁻¹`.
    pub psi: Vec<f64>,
    /// Optimal perturbation of `p̂`; sums to zero.
    pub theta: Vec<f64>,
}

impl QuadraticModel {
    /// `½ θᵀ J θ`.
    pub fn quadratic_form(&self) -> f64 {
        let w: Vec<f64> = self
            .theta
            .iter()
            .zip(&self.fisher_diag)
            .map(|(t, j)| t * j)
            .collect();
        0.5 * dot(&self.theta, &w)
    }
}

/// Minimizes `Ê + θᵀ∇Ê` over `½ θᵀJθ <= R`, `1ᵀθ = 0`.
///
/// The minimizer is `θ = -ψ √(2R) / √(ψᵀJψ)`, with
/// `ψ = J⁻¹(∇Ê - (1ᵀJ⁻¹∇Ê / 1ᵀJ⁻¹1) 1)`.
pub fn quadratic_worst_case(
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    gamma: f64,
    radius: f64,
    hyp: Hypothesis,
) -> Result<(f64, QuadraticModel)> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Argument(format!(
            "radius must be finite and >= 0, got {radius}"
        )));
    }
    let rep = sensitivity_coefficients(p_hat1, p_hat2, gamma)?;
    let center = match hyp {
        Hypothesis::First => p_hat1,
        Hypothesis::Second => p_hat2,
    };
    let p = center.probs();
    let q = rep.q_tilt.probs();
    let fisher_diag: Vec<f64> = p.iter().map(|x| 1.0 / x).collect();
    let gradient: Vec<f64> = q.iter().zip(p).map(|(a, b)| -a / b).collect();
    // J⁻¹ = diag(p̂) and 1ᵀJ⁻¹1 = 1.
    let shift = dot(p, &gradient);
    let psi: Vec<f64> = p
        .iter()
        .zip(&gradient)
        .map(|(pi, g)| pi * (g - shift))
        .collect();
    let norm2 = dot(
        &psi,
        &psi.iter()
            .zip(&fisher_diag)
            .map(|(a, j)| a * j)
            .collect::<Vec<_>>(),
    );
    // ψᵀJψ = χ²(Q̂_λ || p̂), which is rounding noise when the tilt is p̂.
    if !(norm2 > 1e-24) {
        return Err(Error::Domain(format!(
            "gradient is constant for hypothesis {}: the tilt coincides with the center",
            hyp.index()
        )));
    }
    let scale = -(2.0 * radius).sqrt() / norm2.sqrt();
    let theta: Vec<f64> = psi.iter().map(|x| scale * x).collect();
    let value = rep.exponent(hyp) + dot(&theta, &gradient);
    Ok((
        value,
        QuadraticModel {
            fisher_diag,
            gradient,
            psi,
            theta,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub gamma: f64,
    pub s1: f64,
    pub s2: f64,
    pub e1: f64,
    pub e2: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityScan {
    pub rows: Vec<ScanRow>,
    /// Smallest forward difference of `s1` along the grid.
    pub min_ds1: f64,
    /// Largest forward difference of `s2` along the grid.
    pub max_ds2: f64,
    /// Smallest second difference of `e1` along the grid.
    pub min_d2e1: f64,
}

impl SensitivityScan {
    pub fn s1_nondecreasing(&self, slack: f64) -> bool {
        self.min_ds1 >= -slack
    }

    pub fn s2_nonincreasing(&self, slack: f64) -> bool {
        self.max_ds2 <= slack
    }

    /// Threshold at which `s1 - s2` changes sign, by linear interpolation
    /// between neighboring grid points.
    pub fn crossing(&self) -> Option<f64> {
        self.rows.windows(2).find_map(|w| {
            let (a, b) = (w[0].s1 - w[0].s2, w[1].s1 - w[1].s2);
            if a == 0.0 {
                Some(w[0].gamma)
            } else if a < 0.0 && b >= 0.0 {
                Some(w[0].gamma + (w[1].gamma - w[0].gamma) * a / (a - b))
            } else {
                None
            }
        })
    }
}

/// Coefficients on `grid_points` evenly spaced thresholds strictly inside
/// the threshold range.
pub fn sensitivity_monotonicity_scan(
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    grid_points: usize,
) -> Result<SensitivityScan> {
    if grid_points < 3 {
        return Err(Error::Argument(format!(
            "need at least 3 grid points, got {grid_points}"
        )));
    }
    let range = ThresholdRange::new(p_hat1, p_hat2)?;
    let rows = (0..grid_points)
        .into_par_iter()
        .map(|k| {
            let gamma = range.lerp((k + 1) as f64 / (grid_points + 1) as f64);
            let r = sensitivity_coefficients(p_hat1, p_hat2, gamma)?;
            Ok(ScanRow {
                gamma,
                s1: r.s1,
                s2: r.s2,
                e1: r.e1,
                e2: r.e2,
                lambda: r.lambda,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let diffs = |f: fn(&ScanRow) -> f64| -> Vec<f64> {
        rows.windows(2).map(|w| f(&w[1]) - f(&w[0])).collect()
    };
    let ds1 = diffs(|r| r.s1);
    let ds2 = diffs(|r| r.s2);
    let de1 = diffs(|r| r.e1);
    Ok(SensitivityScan {
        min_ds1: ds1.iter().copied().fold(f64::INFINITY, f64::min),
        max_ds2: ds2.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_d2e1: de1
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min),
        rows,
    })
}

/// The threshold at which the two coefficients coincide: the statistic of
/// the half-way tilt.
pub fn equal_sensitivity_threshold(p_hat1: &Distribution, p_hat2: &Distribution) -> Result<f64> {
    let q = tilt(p_hat1, p_hat1, p_hat2, 0.5)?;
    crate::simplex::llr_gap(&q, p_hat1, p_hat2)
}

/// `∂Êi/∂Pi(x) = -Q(x) / Pi(x)` at generating distribution `p`, where `Q`
/// is the achiever of the mismatched exponent.
pub fn exponent_gradient(
    p: &Distribution,
    test: &MismatchedTest,
    hyp: Hypothesis,
) -> Result<Vec<f64>> {
    let q = match hyp {
        Hypothesis::First => mismatched_exponent_1(p, test)?.q,
        Hypothesis::Second => mismatched_exponent_2(p, test)?.q,
    };
    Ok(q.probs()
        .iter()
        .zip(p.probs())
        .map(|(a, b)| -a / b)
        .collect())
}

/// Central finite difference of the mismatched exponent along a direction
/// `v` with `Σ v = 0`.
pub fn directional_difference(
    p: &Distribution,
    test: &MismatchedTest,
    hyp: Hypothesis,
    v: &[f64],
    step: f64,
) -> Result<f64> {
    let total: f64 = v.iter().sum();
    if total.abs() > 1e-12 {
        return Err(Error::Argument("direction must sum to zero".into()));
    }
    let eval = |h: f64| -> Result<f64> {
        let shifted: Vec<f64> = p.probs().iter().zip(v).map(|(a, b)| a + h * b).collect();
        let moved = Distribution::new(shifted)?;
        Ok(match hyp {
            Hypothesis::First => mismatched_exponent_1(&moved, test)?.exponent,
            Hypothesis::Second => mismatched_exponent_2(&moved, test)?.exponent,
        })
    };
    Ok((eval(step)? - eval(-step)?) / (2.0 * step))
}
