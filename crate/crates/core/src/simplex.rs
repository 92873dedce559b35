//! Probability-simplex arithmetic on finite alphabets.
//!
//! Everything is in nats. A [`Distribution`] is strictly positive; functions
//! whose first argument may sit on the boundary of the simplex (empirical
//! types, grid points) take plain slices instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Sum-to-one tolerance for validated distributions.
pub const SUM_TOL: f64 = 1e-12;

/// A strictly positive probability vector over an alphabet of size >= 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "alphabet size must be at least 2, got {}",
                probs.len()
            )));
        }
        if let Some((i, &p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p > 0.0))
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {p}; every entry must be strictly positive"
            )));
        }
        let sum: f64 = probs.iter().copied().collect::<CompensatedSum>().value();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum:.17}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights; every weight must be positive.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weights must have a positive finite total, got {total}"
            )));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    /// `Bern(p) = [1 - p, p]` over `{0, 1}`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    pub fn uniform(alphabet_size: usize) -> Result<Self> {
        Self::new(vec![1.0 / alphabet_size as f64; alphabet_size])
    }

    /// Builds `exp(log_weights) / Z` with max subtraction. Entries that
    /// underflow are floored at the smallest normal double so the result
    /// stays strictly positive.
    pub(crate) fn from_log_weights(log_weights: &[f64]) -> Self {
        let max = log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = log_weights.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p = (*p / total).max(f64::MIN_POSITIVE);
        }
        Self { probs }
    }

    /// Wraps an already-normalized positive vector without re-validating.
    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        debug_assert!(probs.iter().all(|p| *p > 0.0));
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn log_probs(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.ln()).collect()
    }

    /// `beta * other + (1 - beta) * self`.
    pub fn mix(&self, other: &Distribution, beta: f64) -> Distribution {
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| beta * b + (1.0 - beta) * a)
            .collect();
        Self::from_raw(probs)
    }

    pub fn sup_distance(&self, other: &Distribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

/// The type (normalized histogram) of a length-`n` sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalType {
    counts: Vec<u64>,
    n: u64,
}

impl EmpiricalType {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::Argument(
                "a type needs at least one observation".into(),
            ));
        }
        Ok(Self { counts, n })
    }

    pub fn from_sequence(symbols: &[usize], alphabet_size: usize) -> Result<Self> {
        let mut counts = vec![0u64; alphabet_size];
        for &s in symbols {
            *counts.get_mut(s).ok_or_else(|| {
                Error::Argument(format!(
                    "symbol {s} outside alphabet of size {alphabet_size}"
                ))
            })? += 1;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `counts / n`, a point of the closed simplex.
    pub fn as_distribution(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Lexicographic enumeration of all count vectors of `alphabet_size`
/// nonnegative integers summing to `n`.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<u64>>,
    n: u64,
}

impl Compositions {
    pub fn new(n: u64, alphabet_size: usize) -> Self {
        assert!(alphabet_size >= 1);
        let mut first = vec![0; alphabet_size];
        first[alphabet_size - 1] = n;
        Self {
            current: Some(first),
            n,
        }
    }

    /// `C(n + k - 1, k - 1)`, saturating.
    pub fn count(n: u64, alphabet_size: usize) -> u128 {
        let k = alphabet_size as u128 - 1;
        let mut c: u128 = 1;
        for i in 1..=k {
            c = c.saturating_mul(n as u128 + i) / i;
        }
        c
    }
}

impl Iterator for Compositions {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let out = self.current.take()?;
        let k = out.len();
        if k > 1 && out[0] < self.n {
            // Advance: find the rightmost non-last position that can be
            // incremented by borrowing from the tail.
            let mut next = out.clone();
            let mut i = k - 2;
            loop {
                let tail: u64 = next[i + 1..].iter().sum();
                if tail > 0 {
                    next[i] += 1;
                    for v in &mut next[i + 1..] {
                        *v = 0;
                    }
                    next[k - 1] = tail - 1;
                    break;
                }
                if i == 0 {
                    break;
                }
                i -= 1;
            }
            self.current = Some(next);
        }
        Some(out)
    }
}

/// Solver tolerances shared by the bisection and fixed-point routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Absolute tolerance in nats.
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl ToleranceConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol > 0.0 && rel_tol > 0.0 && max_iter >= 1) {
            return Err(Error::Argument(format!(
                "tolerances must be positive and max_iter >= 1 (got {abs_tol}, {rel_tol}, {max_iter})"
            )));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_iter,
        })
    }
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_iter: 200,
        }
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x * y)
        .collect::<CompensatedSum>()
        .value()
}

pub(crate) fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let s: CompensatedSum = p
        .iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .collect();
    s.value().max(0.0)
}

/// Relative entropy `D(p || q)` in nats, with `0 log 0 = 0`.
///
/// `p` may be any point of the closed simplex; `q` must be strictly positive.
pub fn kl(p: impl AsRef<[f64]>, q: impl AsRef<[f64]>) -> Result<f64> {
    let (p, q) = (p.as_ref(), q.as_ref());
    check_dims(q.len(), p.len())?;
    if let Some(i) = q.iter().position(|x| !(*x > 0.0)) {
        return Err(Error::Domain(format!(
            "second argument has non-positive mass {} at symbol {i}",
            q[i]
        )));
    }
    Ok(kl_unchecked(p, q))
}

/// Per-symbol log-likelihood ratio `log(p̂2(x) / p̂1(x))`.
pub fn llr_coefficients(p_hat1: &Distribution, p_hat2: &Distribution) -> Result<Vec<f64>> {
    check_dims(p_hat1.alphabet_size(), p_hat2.alphabet_size())?;
    Ok(p_hat1
        .probs()
        .iter()
        .zip(p_hat2.probs())
        .map(|(a, b)| (b / a).ln())
        .collect())
}

/// Test statistic `D(p || p̂1) - D(p || p̂2) = Σ p(x) log(p̂2(x) / p̂1(x))`.
pub fn llr_gap(p: impl AsRef<[f64]>, p_hat1: &Distribution, p_hat2: &Distribution) -> Result<f64> {
    let p = p.as_ref();
    let coef = llr_coefficients(p_hat1, p_hat2)?;
    check_dims(coef.len(), p.len())?;
    Ok(dot(p, &coef))
}

pub(crate) fn tilt_with(base: &Distribution, coef: &[f64], lambda: f64) -> Distribution {
    let logw: Vec<f64> = base
        .probs()
        .iter()
        .zip(coef)
        .map(|(b, c)| b.ln() + lambda * c)
        .collect();
    Distribution::from_log_weights(&logw)
}

/// Generalized tilt `Q(x) ∝ base(x) p̂1(x)^(-λ) p̂2(x)^λ`, computed in the
/// log domain.
pub fn tilt(
    base: &Distribution,
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    lambda: f64,
) -> Result<Distribution> {
    if !lambda.is_finite() {
        return Err(Error::Argument(format!(
            "tilt parameter must be finite, got {lambda}"
        )));
    }
    let coef = llr_coefficients(p_hat1, p_hat2)?;
    check_dims(coef.len(), base.alphabet_size())?;
    Ok(tilt_with(base, &coef, lambda))
}

/// Bhattacharyya distance `-log Σ sqrt(p(x) q(x))`.
pub fn bhattacharyya(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_dims(p.alphabet_size(), q.alphabet_size())?;
    let bc = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(a, b)| (a * b).sqrt())
        .collect::<CompensatedSum>()
        .value();
    Ok((-bc.ln()).max(0.0))
}

/// χ² divergence `Σ q(x)² / p(x) - 1`, which equals `Var_p(q(X) / p(X))`.
pub fn chi_squared(q: impl AsRef<[f64]>, p: &Distribution) -> Result<f64> {
    let q = q.as_ref();
    check_dims(p.alphabet_size(), q.len())?;
    let s = q
        .iter()
        .zip(p.probs())
        .map(|(a, b)| a * a / b)
        .collect::<CompensatedSum>();
    Ok((s.value() - 1.0).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(Distribution::new(vec![1.0]).is_err());
        assert!(Distribution::new(vec![0.0, 1.0]).is_err());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![f64::NAN, 1.0]).is_err());
        assert!(serde_json::from_str::<Distribution>("[0.2, 0.7]").is_err());
        let ok: Distribution = serde_json::from_str("[0.2, 0.8]").unwrap();
        assert_eq!(ok.probs(), &[0.2, 0.8]);
    }

    #[test]
    fn kl_examples() {
        let a = d(&[0.9, 0.1]);
        let b = d(&[0.2, 0.8]);
        assert_eq!(kl(&a, &a).unwrap(), 0.0);
        // 0.9 ln 4.5 + 0.1 ln 0.125
        let expected = 0.9 * 4.5f64.ln() + 0.1 * 0.125f64.ln();
        assert!((kl(&a, &b).unwrap() - expected).abs() < 1e-15);
        assert!((kl(&a, &b).unwrap() - 1.145_726).abs() < 1e-6);
        assert!((kl(&b, &a).unwrap() - 1.362_738).abs() < 1e-6);
    }

    #[test]
    fn kl_errors() {
        assert!(matches!(
            kl([0.5, 0.5], [0.3, 0.3, 0.4]),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(kl([0.5, 0.5], [0.0, 1.0]), Err(Error::Domain(_))));
        // Zeros in the first argument are allowed.
        assert!((kl([1.0, 0.0], [0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn llr_gap_examples() {
        let a = d(&[0.9, 0.1]);
        let b = d(&[0.2, 0.8]);
        let g = llr_gap(&a, &a, &b).unwrap();
        assert!((g + kl(&a, &b).unwrap()).abs() < 1e-15);
        assert!((llr_gap(&b, &a, &b).unwrap() - kl(&b, &a).unwrap()).abs() < 1e-15);
        let mid = llr_gap([0.6, 0.4], &a, &b).unwrap();
        let expected = 0.6 * (0.2f64 / 0.9).ln() + 0.4 * 8f64.ln();
        assert!((mid - expected).abs() < 1e-15);
        assert!((mid + 0.070_67).abs() < 1e-5);
    }

    #[test]
    fn tilt_examples() {
        let a = d(&[0.9, 0.1]);
        let b = d(&[0.2, 0.8]);
        assert!(tilt(&a, &a, &b, 0.0).unwrap().sup_distance(&a) < 1e-15);
        assert!(tilt(&a, &a, &b, 1.0).unwrap().sup_distance(&b) < 1e-15);
        let half = tilt(&a, &a, &b, 0.5).unwrap();
        assert!(half.sup_distance(&d(&[0.6, 0.4])) < 1e-15);
        // Huge parameters stay finite and positive.
        let far = tilt(&a, &a, &b, 1e6).unwrap();
        assert!(far.probs().iter().all(|p| *p > 0.0));
        assert!((far.probs()[1] - 1.0).abs() < 1e-15);
        assert!(tilt(&a, &a, &b, f64::INFINITY).is_err());
    }

    #[test]
    fn bhattacharyya_examples() {
        let a = d(&[0.9, 0.1]);
        let b = d(&[0.2, 0.8]);
        assert_eq!(bhattacharyya(&a, &a).unwrap(), 0.0);
        assert!((bhattacharyya(&a, &b).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn chi_squared_examples() {
        let a = d(&[0.9, 0.1]);
        let b = d(&[0.2, 0.8]);
        assert!(chi_squared(&a, &a).unwrap().abs() < 1e-15);
        assert!((chi_squared([0.6, 0.4], &a).unwrap() - 1.0).abs() < 1e-14);
        assert!((chi_squared([0.6, 0.4], &b).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn compositions_enumerate_everything_once() {
        let all: Vec<_> = Compositions::new(4, 3).collect();
        assert_eq!(all.len() as u128, Compositions::count(4, 3));
        assert_eq!(all.len(), 15);
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 15);
        assert!(all.iter().all(|c| c.iter().sum::<u64>() == 4));
        assert_eq!(Compositions::new(3, 2).count(), 4);
        assert_eq!(Compositions::new(0, 2).count(), 1);
    }

    #[test]
    fn empirical_type_basics() {
        let t = EmpiricalType::from_sequence(&[0, 1, 1, 2], 3).unwrap();
        assert_eq!(t.counts(), &[1, 2, 1]);
        assert_eq!(t.as_distribution(), vec![0.25, 0.5, 0.25]);
        assert!(EmpiricalType::new(vec![0, 0]).is_err());
        assert!(EmpiricalType::from_sequence(&[3], 3).is_err());
    }

    fn arb_dist(k: usize) -> impl Strategy<Value = Distribution> {
        proptest::collection::vec(0.01f64..1.0, k)
            .prop_map(|w| Distribution::from_weights(w).unwrap())
    }

    fn arb_pair() -> impl Strategy<Value = (Distribution, Distribution)> {
        (2usize..6).prop_flat_map(|k| (arb_dist(k), arb_dist(k)))
    }

    proptest! {
        #[test]
        fn kl_nonnegative_and_zero_on_diagonal((p, q) in arb_pair()) {
            let v = kl(&p, &q).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!(kl(&p, &p).unwrap() < 1e-10);
            if p.sup_distance(&q) > 1e-3 {
                prop_assert!(v > 0.0);
            }
        }

        #[test]
        fn llr_gap_is_affine(
            (p, q) in arb_pair(),
            seed in (0.01f64..1.0, 0.01f64..1.0),
            alpha in 0.0f64..1.0,
        ) {
            let k = p.alphabet_size();
            let h1 = Distribution::from_weights((0..k).map(|i| seed.0 + i as f64 * 0.1).collect()).unwrap();
            let h2 = Distribution::from_weights((0..k).map(|i| seed.1 + (k - i) as f64 * 0.1).collect()).unwrap();
            let mix = p.mix(&q, 1.0 - alpha);
            let lhs = llr_gap(&mix, &h1, &h2).unwrap();
            let rhs = alpha * llr_gap(&p, &h1, &h2).unwrap() + (1.0 - alpha) * llr_gap(&q, &h1, &h2).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn tilted_statistic_increases((p, q) in arb_pair(), l in 0.0f64..0.99) {
            prop_assume!(p.sup_distance(&q) > 1e-3);
            let f = |x: f64| llr_gap(tilt(&p, &p, &q, x).unwrap(), &p, &q).unwrap();
            prop_assert!(f(l + 0.01) > f(l));
        }

        #[test]
        fn bhattacharyya_symmetric((p, q) in arb_pair()) {
            let a = bhattacharyya(&p, &q).unwrap();
            let b = bhattacharyya(&q, &p).unwrap();
            prop_assert!((a - b).abs() < 1e-15);
            prop_assert!(a >= 0.0);
        }

        #[test]
        fn chi_squared_is_variance_of_ratio((q, p) in arb_pair()) {
            let ratio: Vec<f64> = q.probs().iter().zip(p.probs()).map(|(a, b)| a / b).collect();
            let mean: f64 = ratio.iter().zip(p.probs()).map(|(r, w)| r * w).sum();
            let var: f64 = ratio.iter().zip(p.probs()).map(|(r, w)| w * (r - mean).powi(2)).sum();
            prop_assert!((mean - 1.0).abs() < 1e-12);
            prop_assert!((chi_squared(&q, &p).unwrap() - var).abs() < 1e-10 * var.max(1.0));
        }
    }
}
