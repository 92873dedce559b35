//! Exponents of a likelihood ratio test built from mismatched distributions.
//!
//! The test decides hypothesis 2 when `D(T || p̂1) - D(T || p̂2) >= γ̂` for the
//! observed type `T`. Its exponents under the true pair `(P1, P2)` are
//! I-projections of `P1` (resp. `P2`) onto the half-spaces cut out by the
//! test, with minimizers tilted from the *generating* distribution along the
//! *test* log-likelihood ratio.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lrt::{matched_exponents_with, ExponentPair, ThresholdRange};
use crate::numeric::{bisect_increasing, normal_quantile};
use crate::projection::{bracket_upper, dual, project, HalfSpace, Projection};
use crate::simplex::{
    check_dims, dot, kl, kl_unchecked, llr_coefficients, tilt, tilt_with, Distribution,
    ToleranceConfig,
};

/// A likelihood ratio test with test distributions `(p̂1, p̂2)` and
/// threshold `γ̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchedTest {
    p_hat1: Distribution,
    p_hat2: Distribution,
    gamma: f64,
}

impl MismatchedTest {
    pub fn new(p_hat1: Distribution, p_hat2: Distribution, gamma: f64) -> Result<Self> {
        check_dims(p_hat1.alphabet_size(), p_hat2.alphabet_size())?;
        if p_hat1 == p_hat2 {
            return Err(Error::Argument("test distributions must differ".into()));
        }
        if !gamma.is_finite() {
            return Err(Error::Argument(format!(
                "threshold must be finite, got {gamma}"
            )));
        }
        Ok(Self {
            p_hat1,
            p_hat2,
            gamma,
        })
    }

    pub fn p_hat1(&self) -> &Distribution {
        &self.p_hat1
    }

    pub fn p_hat2(&self) -> &Distribution {
        &self.p_hat2
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }

    /// Per-symbol statistic `log(p̂2(x) / p̂1(x))`.
    pub fn coefficients(&self) -> Vec<f64> {
        llr_coefficients(&self.p_hat1, &self.p_hat2).expect("dimensions checked at construction")
    }

    /// `D(q || p̂1) - D(q || p̂2)` for any point of the closed simplex.
    pub fn statistic(&self, q: &[f64]) -> f64 {
        dot(q, &self.coefficients())
    }

    /// The deterministic decision rule: `statistic >= γ̂` decides 2.
    pub fn decides_second(&self, q: &[f64]) -> bool {
        self.statistic(q) >= self.gamma
    }

    /// Region whose probability under `P1` is the type-I error.
    pub fn first_error_region(&self) -> HalfSpace {
        HalfSpace::new(self.coefficients(), self.gamma)
    }

    /// Region whose probability under `P2` is the type-II error.
    pub fn second_error_region(&self) -> HalfSpace {
        self.first_error_region().flipped()
    }

    pub fn alphabet_size(&self) -> usize {
        self.p_hat1.alphabet_size()
    }
}

/// `(e, q, λ)`: exponent, achieving distribution and tilt multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchedExponent {
    pub exponent: f64,
    pub q: Distribution,
    pub lambda: f64,
}

impl From<Projection> for MismatchedExponent {
    fn from(p: Projection) -> Self {
        Self {
            exponent: p.value,
            q: p.q,
            lambda: p.lambda,
        }
    }
}

/// Type-I exponent `min { D(Q || P1) : D(Q||p̂1) - D(Q||p̂2) >= γ̂ }`.
///
/// Zero, with `q = P1`, whenever `P1` itself already falls in the decision
/// region of hypothesis 2.
pub fn mismatched_exponent_1(
    p1: &Distribution,
    test: &MismatchedTest,
) -> Result<MismatchedExponent> {
    mismatched_exponent_1_with(p1, test, &ToleranceConfig::default())
}

pub fn mismatched_exponent_1_with(
    p1: &Distribution,
    test: &MismatchedTest,
    tol: &ToleranceConfig,
) -> Result<MismatchedExponent> {
    check_dims(test.alphabet_size(), p1.alphabet_size())?;
    Ok(project(p1, &test.first_error_region(), tol)?.into())
}

/// Type-II exponent `min { D(Q || P2) : D(Q||p̂1) - D(Q||p̂2) <= γ̂ }`.
pub fn mismatched_exponent_2(
    p2: &Distribution,
    test: &MismatchedTest,
) -> Result<MismatchedExponent> {
    mismatched_exponent_2_with(p2, test, &ToleranceConfig::default())
}

pub fn mismatched_exponent_2_with(
    p2: &Distribution,
    test: &MismatchedTest,
    tol: &ToleranceConfig,
) -> Result<MismatchedExponent> {
    check_dims(test.alphabet_size(), p2.alphabet_size())?;
    Ok(project(p2, &test.second_error_region(), tol)?.into())
}

/// Both mismatched exponents packaged like the matched ones.
pub fn mismatched_exponents(
    p1: &Distribution,
    p2: &Distribution,
    test: &MismatchedTest,
) -> Result<ExponentPair> {
    let a = mismatched_exponent_1(p1, test)?;
    let b = mismatched_exponent_2(p2, test)?;
    Ok(ExponentPair {
        e1: a.exponent,
        e2: b.exponent,
        q1: a.q,
        q2: b.q,
        lambda1: a.lambda,
        lambda2: b.lambda,
    })
}

/// Which closed form of the dual exponent to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualForm {
    /// Obtained from the Lagrangian of the primal problem: the log-partition
    /// function tilts the generating distribution along `log(p̂2/p̂1)`.
    #[default]
    Lagrangian,
    /// The variant whose log-partition mixes generating and test
    /// distributions: `Σ P1 p̂1^{-λ} P2^λ` for hypothesis 1 and
    /// `Σ P1^λ P2 p̂2^{-λ}` for hypothesis 2. It agrees with the primal only
    /// in special cases (for instance when there is no mismatch).
    Printed,
}

/// Dual form of [`mismatched_exponent_1`]:
/// `max_{λ>=0} λγ̂ - log Σ P1 p̂1^{-λ} p̂2^λ`.
pub fn mismatched_dual_1(p1: &Distribution, test: &MismatchedTest) -> Result<f64> {
    check_dims(test.alphabet_size(), p1.alphabet_size())?;
    Ok(dual(p1, &test.first_error_region(), &ToleranceConfig::default())?.value)
}

/// Dual form of [`mismatched_exponent_2`]:
/// `max_{λ>=0} -λγ̂ - log Σ P2 p̂2^{-λ} p̂1^λ`.
pub fn mismatched_dual_2(p2: &Distribution, test: &MismatchedTest) -> Result<f64> {
    check_dims(test.alphabet_size(), p2.alphabet_size())?;
    Ok(dual(p2, &test.second_error_region(), &ToleranceConfig::default())?.value)
}

/// Type-I dual under an explicit [`DualForm`]. `p2` is only used by the
/// printed variant.
pub fn mismatched_dual_1_with(
    p1: &Distribution,
    p2: &Distribution,
    test: &MismatchedTest,
    form: DualForm,
) -> Result<f64> {
    match form {
        DualForm::Lagrangian => mismatched_dual_1(p1, test),
        DualForm::Printed => {
            check_dims(test.alphabet_size(), p2.alphabet_size())?;
            let coef = llr_coefficients(test.p_hat1(), p2)?;
            let hs = HalfSpace::new(coef, test.gamma());
            Ok(dual(p1, &hs, &ToleranceConfig::default())?.value)
        }
    }
}

/// Type-II dual under an explicit [`DualForm`]. `p1` is only used by the
/// printed variant.
pub fn mismatched_dual_2_with(
    p1: &Distribution,
    p2: &Distribution,
    test: &MismatchedTest,
    form: DualForm,
) -> Result<f64> {
    match form {
        DualForm::Lagrangian => mismatched_dual_2(p2, test),
        DualForm::Printed => {
            check_dims(test.alphabet_size(), p1.alphabet_size())?;
            // -λγ̂ - log Σ P2 e^{λ log(P1/p̂2)}
            let coef = llr_coefficients(test.p_hat2(), p1)?;
            let hs = HalfSpace::new(coef, -test.gamma());
            Ok(dual(p2, &hs, &ToleranceConfig::default())?.value)
        }
    }
}

/// Best matched type-II exponent subject to a type-I exponent of at least
/// `e1`, i.e. the optimal tradeoff curve of the pair `(p1, p2)`.
///
/// Returns `0` once `e1 >= D(p2 || p1)`.
pub fn matched_tradeoff_e2(p1: &Distribution, p2: &Distribution, e1: f64) -> Result<f64> {
    check_dims(p1.alphabet_size(), p2.alphabet_size())?;
    if e1 <= 0.0 {
        return kl(p1, p2);
    }
    if e1 >= kl(p2, p1)? {
        return Ok(0.0);
    }
    let coef = llr_coefficients(p1, p2)?;
    let root = bisect_increasing(
        |l| kl_unchecked(tilt_with(p1, &coef, l).probs(), p1.probs()) - e1,
        0.0,
        1.0,
        200,
    );
    let q = tilt_with(p1, &coef, root.x);
    kl(&q, p2)
}

/// Whether `(e1, e2)` lies on the matched optimal tradeoff of `(p1, p2)`
/// within `tol`.
///
/// The vertical segment `{e1 = 0, e2 >= D(p1||p2)}` and the horizontal
/// segment `{e2 = 0, e1 >= D(p2||p1)}` swept by out-of-range thresholds
/// count as on the curve.
pub fn on_matched_curve(
    p1: &Distribution,
    p2: &Distribution,
    e1: f64,
    e2: f64,
    tol: f64,
) -> Result<bool> {
    if e1 <= tol {
        return Ok(e2 >= kl(p1, p2)? - tol);
    }
    Ok((matched_tradeoff_e2(p1, p2, e1)? - e2).abs() <= tol)
}

/// Tolerance used by [`remark1_tilted_optimality_check`].
pub const ON_CURVE_TOL: f64 = 1e-6;

/// Builds test distributions from the tilted family of `(p1, p2)` at
/// `λa < λb` and reports whether the resulting mismatched exponents land on
/// the matched optimal tradeoff.
pub fn remark1_tilted_optimality_check(
    p1: &Distribution,
    p2: &Distribution,
    lambda_a: f64,
    lambda_b: f64,
    gamma_hat: f64,
) -> Result<(ExponentPair, bool)> {
    if !(0.0..=1.0).contains(&lambda_a) || !(0.0..=1.0).contains(&lambda_b) || lambda_a >= lambda_b
    {
        return Err(Error::Argument(format!(
            "need 0 <= λa < λb <= 1, got ({lambda_a}, {lambda_b})"
        )));
    }
    let test = MismatchedTest::new(
        tilt(p1, p1, p2, lambda_a)?,
        tilt(p1, p1, p2, lambda_b)?,
        gamma_hat,
    )?;
    let point = mismatched_exponents(p1, p2, &test)?;
    let on_curve = on_matched_curve(p1, p2, point.e1, point.e2, ON_CURVE_TOL)?;
    Ok((point, on_curve))
}

/// `Var_{P1}(log p̂1(X) / p̂2(X))`.
pub fn llr_variance(
    p1: &Distribution,
    p_hat1: &Distribution,
    p_hat2: &Distribution,
) -> Result<f64> {
    let coef = llr_coefficients(p_hat1, p_hat2)?;
    check_dims(coef.len(), p1.alphabet_size())?;
    let mean = dot(p1.probs(), &coef);
    let centered: Vec<f64> = coef.iter().map(|c| (c - mean).powi(2)).collect();
    Ok(dot(p1.probs(), &centered))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinReport {
    /// Finite-`n` threshold `γ̂_n = γ̂∞ + Ĉ2 / √n`.
    pub threshold: f64,
    /// Limiting threshold `γ̂∞ = D(P1||p̂1) - D(P1||p̂2)`.
    pub limit_threshold: f64,
    /// Type-II exponent at the limiting threshold.
    pub exponent: f64,
    /// `V = Var_{P1}(log p̂1/p̂2)`, nats².
    pub variance: f64,
    /// `Ĉ2 = -√V Φ⁻¹(ε)`.
    pub c_hat2: f64,
    pub epsilon: f64,
    pub n: u64,
}

/// `(γ̂_n, V, Ĉ2)` for type-I level `ε ∈ (0, 1/2]`. At `ε = 1/2` the
/// correction vanishes.
pub fn stein_threshold(
    p1: &Distribution,
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    epsilon: f64,
    n: u64,
) -> Result<(f64, f64, f64)> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::Argument(format!(
            "ε must lie in (0, 1/2], got {epsilon}"
        )));
    }
    if n == 0 {
        return Err(Error::Argument("n must be positive".into()));
    }
    let variance = llr_variance(p1, p_hat1, p_hat2)?;
    let c_hat2 = -variance.sqrt() * normal_quantile(epsilon);
    let limit = dot(p1.probs(), &llr_coefficients(p_hat1, p_hat2)?);
    Ok((limit + c_hat2 / (n as f64).sqrt(), variance, c_hat2))
}

/// Stein-regime operating point of the mismatched test for generating pair
/// `(p1, p2)` and test distributions `(p̂1, p̂2)`.
pub fn stein_mismatched(
    p1: &Distribution,
    p2: &Distribution,
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    epsilon: f64,
    n: u64,
) -> Result<SteinReport> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Argument(format!(
            "ε must lie in (0, 1/2), got {epsilon}"
        )));
    }
    let (threshold, variance, c_hat2) = stein_threshold(p1, p_hat1, p_hat2, epsilon, n)?;
    let limit = threshold - c_hat2 / (n as f64).sqrt();
    let limit_exact = dot(p1.probs(), &llr_coefficients(p_hat1, p_hat2)?);
    let test = MismatchedTest::new(p_hat1.clone(), p_hat2.clone(), limit_exact)?;
    let exponent = mismatched_exponent_2(p2, &test)?.exponent;
    debug_assert!((limit - limit_exact).abs() < 1e-9);
    Ok(SteinReport {
        threshold,
        limit_threshold: limit_exact,
        exponent,
        variance,
        c_hat2,
        epsilon,
        n,
    })
}

/// Bayes exponent `min(Ê1, Ê2)` for fixed priors.
pub fn bayes_exponent(p1: &Distribution, p2: &Distribution, test: &MismatchedTest) -> Result<f64> {
    let a = mismatched_exponent_1(p1, test)?.exponent;
    let b = mismatched_exponent_2(p2, test)?.exponent;
    Ok(a.min(b))
}

/// Re-derives the tilt multiplier from an achiever `q` of a mismatched
/// problem with generating distribution `base` and statistic `coef`:
/// `log(q/base) = λ coef + const`. Least squares over symbol pairs.
pub fn refit_tilt(q: &Distribution, base: &Distribution, coef: &[f64]) -> Result<f64> {
    check_dims(base.alphabet_size(), q.alphabet_size())?;
    check_dims(coef.len(), q.alphabet_size())?;
    let k = coef.len() as f64;
    let y: Vec<f64> = q
        .probs()
        .iter()
        .zip(base.probs())
        .map(|(a, b)| (a / b).ln())
        .collect();
    let cm = coef.iter().sum::<f64>() / k;
    let ym = y.iter().sum::<f64>() / k;
    let sxx: f64 = coef.iter().map(|c| (c - cm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument(
            "statistic is constant; tilt undefined".into(),
        ));
    }
    let sxy: f64 = coef.iter().zip(&y).map(|(c, v)| (c - cm) * (v - ym)).sum();
    Ok(sxy / sxx)
}

/// Matched exponents of `(p̂1, p̂2)` evaluated at the test threshold, i.e.
/// the mismatched exponents when the data really follow the test pair.
pub fn nominal_exponents(test: &MismatchedTest) -> Result<ExponentPair> {
    matched_exponents_with(
        test.p_hat1(),
        test.p_hat2(),
        test.gamma(),
        &ToleranceConfig::default(),
    )
}

/// Range of thresholds `[-D(p̂1||p̂2), D(p̂2||p̂1)]` for the test pair.
pub fn test_threshold_range(test: &MismatchedTest) -> Result<ThresholdRange> {
    ThresholdRange::new(test.p_hat1(), test.p_hat2())
}

/// Upper end of the bracket used when inverting a mismatched tilt for
/// a target statistic value; exposed for callers that need to warm-start.
pub fn tilt_bracket(base: &Distribution, hs: &HalfSpace) -> Result<f64> {
    bracket_upper(
        |l| hs.mean(tilt_with(base, &hs.coef, l).probs()) - hs.level,
        "tilt",
    )
}
