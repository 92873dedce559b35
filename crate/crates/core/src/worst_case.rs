//! Least favorable generating distributions over relative-entropy balls.
//!
//! For hypothesis 1 the worst-case exponent is
//!
//! ```text
//! min { D(Q || P) : D(p̂1 || P) <= R, D(Q||p̂1) - D(Q||p̂2) >= γ̂ }
//! ```
//!
//! and hypothesis 2 mirrors it around `p̂2` with the opposite half-space.
//! At an interior optimum `Q` is a tilt of `P` along the test statistic and
//! `P = β Q + (1 - β) center`.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect_increasing;
use crate::projection::{bracket_upper, project, HalfSpace};
use crate::simplex::{
    check_dims, dot, kl_unchecked, llr_coefficients, tilt_with, Distribution, ToleranceConfig,
};

/// Largest radius considered by [`critical_radius`], in nats.
pub const R_MAX: f64 = 50.0;

/// Stationary-point parameter beyond which the ball optimizer is treated as
/// touching the simplex boundary.
const S_CAP: f64 = 1e12;
const BOUNDARY_FLOOR: f64 = 1e-12;

const FIXED_POINT_TOL: f64 = 1e-11;
const FIXED_POINT_MAX_ITER: usize = 200_000;
/// Accepted KKT residual at an interior solution.
pub const KKT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
}

impl Hypothesis {
    pub fn index(self) -> usize {
        match self {
            Hypothesis::First => 1,
            Hypothesis::Second => 2,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Hypothesis::First),
            2 => Ok(Hypothesis::Second),
            _ => Err(Error::Argument(format!(
                "hypothesis must be 1 or 2, got {i}"
            ))),
        }
    }
}

/// `{P : D(center || P) <= radius}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlBall {
    pub center: Distribution,
    pub radius: f64,
}

impl KlBall {
    pub fn new(center: Distribution, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::Argument(format!(
                "radius must be finite and >= 0, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: &Distribution) -> bool {
        p.alphabet_size() == self.center.alphabet_size()
            && kl_unchecked(self.center.probs(), p.probs()) <= self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Max,
    Min,
}

/// Optimum of a linear functional over a [`KlBall`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallExtreme {
    pub value: f64,
    pub argmax: Distribution,
    /// Set when the optimizer had to be clamped at the simplex boundary.
    pub boundary: bool,
}

/// `D(center || P_s)` for `P_s ∝ center / (1 + s d)`.
fn ball_divergence(center: &[f64], d: &[f64], s: f64) -> f64 {
    let lin = dot(
        center,
        &d.iter().map(|x| (s * x).ln_1p()).collect::<Vec<_>>(),
    );
    let shrink = dot(
        center,
        &d.iter().map(|x| s * x / (1.0 + s * x)).collect::<Vec<_>>(),
    );
    lin + (-shrink).ln_1p()
}

fn ball_point(center: &[f64], d: &[f64], s: f64) -> Vec<f64> {
    let w: Vec<f64> = center
        .iter()
        .zip(d)
        .map(|(c, x)| c / (1.0 + s * x))
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// `max { Σ P a : D(center || P) <= radius }`.
///
/// The optimizer has the form `P ∝ center / (1 + s (max a - a))` with
/// `s >= 0` chosen so the radius constraint is active.
pub fn ball_linear_max(ball: &KlBall, coef: &[f64]) -> Result<BallExtreme> {
    let center = ball.center.probs();
    check_dims(center.len(), coef.len())?;
    let amax = coef.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d: Vec<f64> = coef.iter().map(|a| amax - a).collect();
    if ball.radius == 0.0 || d.iter().all(|x| *x == 0.0) {
        return Ok(BallExtreme {
            value: dot(center, coef),
            argmax: ball.center.clone(),
            boundary: false,
        });
    }
    let residual = |s: f64| ball_divergence(center, &d, s) - ball.radius;
    let mut hi = 1.0;
    while residual(hi) < 0.0 && hi < S_CAP {
        hi *= 2.0;
    }
    let (probs, boundary) = if residual(hi) < 0.0 {
        let mut p = ball_point(center, &d, S_CAP);
        for x in &mut p {
            *x = x.max(BOUNDARY_FLOOR);
        }
        let z: f64 = p.iter().sum();
        (p.into_iter().map(|x| x / z).collect(), true)
    } else {
        let mut s = bisect_increasing(residual, 0.0, hi, 400).x;
        let mut p = ball_point(center, &d, s);
        // Step inward until direct evaluation confirms membership.
        for _ in 0..1000 {
            if kl_unchecked(center, &p) <= ball.radius {
                break;
            }
            s -= (s * 1e-14).max(f64::MIN_POSITIVE);
            p = ball_point(center, &d, s);
        }
        (p, false)
    };
    let argmax = Distribution::from_raw(probs);
    Ok(BallExtreme {
        value: dot(argmax.probs(), coef),
        argmax,
        boundary,
    })
}

/// Extremum of `P ↦ D(P||p̂1) - D(P||p̂2)` over a ball.
pub fn ball_llr_extreme(
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    ball: &KlBall,
    direction: Direction,
) -> Result<BallExtreme> {
    let coef = llr_coefficients(p_hat1, p_hat2)?;
    match direction {
        Direction::Max => ball_linear_max(ball, &coef),
        Direction::Min => {
            let neg: Vec<f64> = coef.iter().map(|c| -c).collect();
            let mut e = ball_linear_max(ball, &neg)?;
            e.value = -e.value;
            Ok(e)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorstCaseStatus {
    /// Both constraints active; `(λ, β)` solve the stationarity system.
    Interior,
    /// Some distribution in the ball already lies in the error region.
    ZeroExponent,
    /// `p̂1 = p̂2`: the statistic is identically zero.
    CenterDegenerate,
}

/// Residuals of the stationarity system at a returned solution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// `sup |tilt(P, λ) - Q|`.
    pub tilt: f64,
    /// `sup |β Q + (1 - β) center - P|`.
    pub mixture: f64,
    /// `|statistic(Q) - γ̂|`.
    pub threshold: f64,
    /// `|D(center || P) - R|`.
    pub radius: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.tilt
            .max(self.mixture)
            .max(self.threshold)
            .max(self.radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseSolution {
    pub exponent: f64,
    pub p_least: Distribution,
    pub q_opt: Distribution,
    pub lambda: f64,
    pub beta: f64,
    pub status: WorstCaseStatus,
    pub kkt: KktResiduals,
}

/// Cooperative cancellation flag shared between a caller and a solver.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

/// The center and error region defining a worst-case problem.
#[derive(Debug, Clone)]
struct Problem {
    center: Distribution,
    region: HalfSpace,
}

impl Problem {
    fn new(
        p_hat1: &Distribution,
        p_hat2: &Distribution,
        gamma: f64,
        hyp: Hypothesis,
    ) -> Result<Self> {
        check_dims(p_hat1.alphabet_size(), p_hat2.alphabet_size())?;
        if !gamma.is_finite() {
            return Err(Error::Argument(format!(
                "threshold must be finite, got {gamma}"
            )));
        }
        let region = HalfSpace::new(llr_coefficients(p_hat1, p_hat2)?, gamma);
        Ok(match hyp {
            Hypothesis::First => Self {
                center: p_hat1.clone(),
                region,
            },
            Hypothesis::Second => Self {
                center: p_hat2.clone(),
                region: region.flipped(),
            },
        })
    }

    fn residuals(
        &self,
        radius: f64,
        p: &Distribution,
        q: &Distribution,
        lambda: f64,
        beta: f64,
    ) -> KktResiduals {
        KktResiduals {
            tilt: tilt_with(p, &self.region.coef, lambda).sup_distance(q),
            mixture: self.center.mix(q, beta).sup_distance(p),
            threshold: (self.region.mean(q.probs()) - self.region.level).abs(),
            radius: (kl_unchecked(self.center.probs(), p.probs()) - radius).abs(),
        }
    }
}

/// Worst-case exponent solver with configurable tolerances and optional
/// cancellation.
#[derive(Debug, Clone, Default)]
pub struct WorstCaseSolver {
    pub tol: ToleranceConfig,
    cancel: Option<CancelToken>,
}

impl WorstCaseSolver {
    pub fn new(tol: ToleranceConfig) -> Self {
        Self { tol, cancel: None }
    }

    pub fn with_cancel(mut self, token: CancelToken) -> Self {
        self.cancel = Some(token);
        self
    }

    fn check_cancel(&self) -> Result<()> {
        match &self.cancel {
            Some(t) if t.is_cancelled() => Err(Error::Cancelled),
            _ => Ok(()),
        }
    }

    pub fn solve(
        &self,
        p_hat1: &Distribution,
        p_hat2: &Distribution,
        gamma: f64,
        radius: f64,
        hyp: Hypothesis,
    ) -> Result<WorstCaseSolution> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::Argument(format!(
                "radius must be finite and >= 0, got {radius}"
            )));
        }
        let problem = Problem::new(p_hat1, p_hat2, gamma, hyp)?;
        if p_hat1 == p_hat2 {
            return Ok(degenerate(&problem));
        }
        self.solve_problem(&problem, radius)
    }

    fn solve_problem(&self, pb: &Problem, radius: f64) -> Result<WorstCaseSolution> {
        let region = &pb.region;
        if radius == 0.0 {
            let pr = project(&pb.center, region, &self.tol)?;
            let status = if pr.active {
                WorstCaseStatus::Interior
            } else {
                WorstCaseStatus::ZeroExponent
            };
            let kkt = pb.residuals(0.0, &pb.center, &pr.q, pr.lambda, 0.0);
            return Ok(WorstCaseSolution {
                exponent: pr.value,
                p_least: pb.center.clone(),
                q_opt: pr.q,
                lambda: pr.lambda,
                beta: 0.0,
                status,
                kkt,
            });
        }
        let ball = KlBall::new(pb.center.clone(), radius)?;
        let witness = ball_linear_max(&ball, &region.coef)?;
        if witness.value >= region.level {
            return Ok(WorstCaseSolution {
                exponent: 0.0,
                q_opt: witness.argmax.clone(),
                p_least: witness.argmax,
                lambda: 0.0,
                beta: 0.0,
                status: WorstCaseStatus::ZeroExponent,
                kkt: KktResiduals::default(),
            });
        }
        let sup = region.sup();
        if region.level >= sup {
            return Err(Error::Unbounded {
                level: region.level,
                sup,
            });
        }

        // Outer bisection on β for D(center || P_β) = R.
        let mut warm = pb.center.clone();
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut f_lo = -radius;
        let mut f_hi = {
            let (p, _, _) = self.fixed_point(pb, 1.0, &mut warm)?;
            kl_unchecked(pb.center.probs(), p.probs()) - radius
        };
        warm = pb.center.clone();
        let mut iterations = 0;
        loop {
            let mid = lo + 0.5 * (hi - lo);
            if mid <= lo || mid >= hi || iterations >= 200 {
                break;
            }
            iterations += 1;
            let (p, _, _) = self.fixed_point(pb, mid, &mut warm)?;
            let f = kl_unchecked(pb.center.probs(), p.probs()) - radius;
            if f >= 0.0 {
                hi = mid;
                f_hi = f;
            } else {
                lo = mid;
                f_lo = f;
            }
        }
        let beta = if f_hi.abs() < f_lo.abs() { hi } else { lo };
        let (p, q, lambda) = self.fixed_point(pb, beta, &mut warm)?;
        let kkt = pb.residuals(radius, &p, &q, lambda, beta);
        if kkt.max() > KKT_TOL {
            return Err(Error::NonConvergence {
                iterations,
                detail: "stationarity residuals above tolerance".into(),
                last_iterate: p.probs().to_vec(),
                residuals: vec![kkt.tilt, kkt.mixture, kkt.threshold, kkt.radius],
            });
        }
        Ok(WorstCaseSolution {
            exponent: kl_unchecked(q.probs(), p.probs()),
            p_least: p,
            q_opt: q,
            lambda,
            beta,
            status: WorstCaseStatus::Interior,
            kkt,
        })
    }

    /// Iterates `Q ← projection of P`, `P ← β Q + (1 - β) center` for fixed
    /// `β`, halving the step whenever the update grows.
    fn fixed_point(
        &self,
        pb: &Problem,
        beta: f64,
        warm: &mut Distribution,
    ) -> Result<(Distribution, Distribution, f64)> {
        let mut p = warm.clone();
        let mut omega: f64 = 1.0;
        let mut prev = f64::INFINITY;
        for it in 0..FIXED_POINT_MAX_ITER {
            if it % 64 == 0 {
                self.check_cancel()?;
            }
            let pr = project(&p, &pb.region, &self.tol)?;
            let target = pb.center.mix(&pr.q, beta);
            let step = target.sup_distance(&p);
            if step < FIXED_POINT_TOL {
                let pr = project(&target, &pb.region, &self.tol)?;
                *warm = target.clone();
                return Ok((target, pr.q, pr.lambda));
            }
            if step > prev {
                omega = (omega * 0.5).max(1.0 / 1024.0);
            }
            prev = step;
            p = p.mix(&target, omega);
        }
        Err(Error::NonConvergence {
            iterations: FIXED_POINT_MAX_ITER,
            detail: format!("fixed point at β = {beta} did not settle"),
            last_iterate: p.probs().to_vec(),
            residuals: vec![prev],
        })
    }
}

fn degenerate(pb: &Problem) -> WorstCaseSolution {
    // The statistic is identically 0, so the region is everything or nothing.
    let exponent = if pb.region.level <= 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    WorstCaseSolution {
        exponent,
        p_least: pb.center.clone(),
        q_opt: pb.center.clone(),
        lambda: 0.0,
        beta: 0.0,
        status: WorstCaseStatus::CenterDegenerate,
        kkt: KktResiduals::default(),
    }
}

/// Worst-case type-I exponent over `{P1 : D(p̂1 || P1) <= R1}`.
pub fn worst_case_exponent_1(
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    gamma: f64,
    r1: f64,
    opts: &ToleranceConfig,
) -> Result<WorstCaseSolution> {
    WorstCaseSolver::new(*opts).solve(p_hat1, p_hat2, gamma, r1, Hypothesis::First)
}

/// Worst-case type-II exponent over `{P2 : D(p̂2 || P2) <= R2}`.
pub fn worst_case_exponent_2(
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    gamma: f64,
    r2: f64,
    opts: &ToleranceConfig,
) -> Result<WorstCaseSolution> {
    WorstCaseSolver::new(*opts).solve(p_hat1, p_hat2, gamma, r2, Hypothesis::Second)
}

pub fn worst_case_exponent(
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    gamma: f64,
    radius: f64,
    hyp: Hypothesis,
    opts: &ToleranceConfig,
) -> Result<WorstCaseSolution> {
    WorstCaseSolver::new(*opts).solve(p_hat1, p_hat2, gamma, radius, hyp)
}

/// Worst-case exponent through the saddle-point dual
/// `max_{λ>=0} λ t - log max_{P in ball} Σ P e^{λ a}`.
///
/// Independent of the fixed-point iteration; used to cross-check it.
pub fn worst_case_exponent_dual(
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    gamma: f64,
    radius: f64,
    hyp: Hypothesis,
) -> Result<f64> {
    let pb = Problem::new(p_hat1, p_hat2, gamma, hyp)?;
    let ball = KlBall::new(pb.center.clone(), radius)?;
    if p_hat1 == p_hat2 {
        return Ok(degenerate(&pb).exponent);
    }
    let a = &pb.region.coef;
    let t = pb.region.level;
    if ball_linear_max(&ball, a)?.value >= t {
        return Ok(0.0);
    }
    let sup = pb.region.sup();
    if t >= sup {
        return Err(Error::Unbounded { level: t, sup });
    }
    // For numerical range, maximize over e^{λ(a - sup)} and add λ sup back.
    let inner = |lambda: f64| -> Result<(f64, Distribution)> {
        let w: Vec<f64> = a.iter().map(|x| (lambda * (x - sup)).exp()).collect();
        let e = ball_linear_max(&ball, &w)?;
        Ok((lambda * sup + e.value.ln(), e.argmax))
    };
    // Slope of the concave objective is t - E_Q[a] with Q the tilt of the
    // inner maximizer.
    let neg_slope = |lambda: f64| -> f64 {
        match inner(lambda) {
            Ok((_, p)) => pb.region.mean(tilt_with(&p, a, lambda).probs()) - t,
            Err(_) => f64::NAN,
        }
    };
    let cap = bracket_upper(neg_slope, "the worst-case dual maximizer")?;
    let root = bisect_increasing(neg_slope, 0.0, cap, 300);
    let (log_m, _) = inner(root.x)?;
    Ok(root.x * t - log_m)
}

/// Smallest radius at which the worst-case exponent drops to zero.
///
/// Returns `f64::INFINITY` when the ball never reaches the error region up
/// to [`R_MAX`].
pub fn critical_radius(
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    gamma: f64,
    hyp: Hypothesis,
) -> Result<f64> {
    let pb = Problem::new(p_hat1, p_hat2, gamma, hyp)?;
    let region = &pb.region;
    let center = pb.center.probs();
    if region.contains(center) {
        return Ok(0.0);
    }
    if p_hat1 == p_hat2 || region.level >= region.sup() {
        return Ok(f64::INFINITY);
    }
    let d: Vec<f64> = region.coef.iter().map(|a| region.sup() - a).collect();
    let mean_gap = |s: f64| dot(&ball_point(center, &d, s), &region.coef) - region.level;
    let cap = match bracket_upper(mean_gap, "the critical radius") {
        Ok(c) => c,
        Err(_) => return Ok(f64::INFINITY),
    };
    let root = bisect_increasing(mean_gap, 0.0, cap, 400);
    let r = ball_divergence(center, &d, root.x);
    Ok(if r > R_MAX { f64::INFINITY } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mismatch::{mismatched_exponent_1, mismatched_exponent_2, MismatchedTest};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    fn example() -> (Distribution, Distribution) {
        (d(&[0.9, 0.1]), d(&[0.2, 0.8]))
    }

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn zero_radius_reduces_to_mismatched() {
        let (a, b) = example();
        let test = MismatchedTest::new(a.clone(), b.clone(), 0.0).unwrap();
        let w1 = worst_case_exponent_1(&a, &b, 0.0, 0.0, &tol()).unwrap();
        let w2 = worst_case_exponent_2(&a, &b, 0.0, 0.0, &tol()).unwrap();
        assert_eq!(
            w1.exponent,
            mismatched_exponent_1(&a, &test).unwrap().exponent
        );
        assert_eq!(
            w2.exponent,
            mismatched_exponent_2(&b, &test).unwrap().exponent
        );
        assert_eq!(w1.status, WorstCaseStatus::Interior);
    }

    #[test]
    fn ball_extreme_trivial_cases() {
        let (a, b) = example();
        let ball = KlBall::new(a.clone(), 0.0).unwrap();
        let e = ball_llr_extreme(&a, &b, &ball, Direction::Max).unwrap();
        assert_eq!(e.argmax, a);
        let ball = KlBall::new(a.clone(), 0.3).unwrap();
        let e = ball_llr_extreme(&b, &b, &ball, Direction::Max).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(KlBall::new(a, -1.0).is_err());
    }

    #[test]
    fn ball_extreme_lies_on_sphere() {
        let (a, b) = example();
        let ball = KlBall::new(a.clone(), 0.01).unwrap();
        let max = ball_llr_extreme(&a, &b, &ball, Direction::Max).unwrap();
        let min = ball_llr_extreme(&a, &b, &ball, Direction::Min).unwrap();
        assert!(ball.contains(&max.argmax) && ball.contains(&min.argmax));
        assert!((kl_unchecked(a.probs(), max.argmax.probs()) - 0.01).abs() < 1e-13);
        let center = crate::simplex::llr_gap(&a, &a, &b).unwrap();
        assert!(min.value < center && center < max.value);
        assert!(!max.boundary);
    }

    #[test]
    fn huge_ball_hits_boundary() {
        let (a, b) = example();
        let ball = KlBall::new(a.clone(), 40.0).unwrap();
        let e = ball_llr_extreme(&a, &b, &ball, Direction::Max).unwrap();
        assert!(e.boundary);
        assert!(e.argmax.probs()[0] >= 1e-12 * 0.99);
    }

    #[test]
    fn large_radius_zeroes_exponent() {
        let (a, b) = example();
        let rc = critical_radius(&a, &b, 0.0, Hypothesis::First).unwrap();
        assert!(rc.is_finite() && rc > 0.0);
        let w = worst_case_exponent_1(&a, &b, 0.0, rc * 1.01, &tol()).unwrap();
        assert_eq!(w.exponent, 0.0);
        assert_eq!(w.status, WorstCaseStatus::ZeroExponent);
        // The witness really has zero exponent.
        let test = MismatchedTest::new(a.clone(), b.clone(), 0.0).unwrap();
        assert_eq!(
            mismatched_exponent_1(&w.p_least, &test).unwrap().exponent,
            0.0
        );
        let w = worst_case_exponent_1(&a, &b, 0.0, rc * 0.99, &tol()).unwrap();
        assert!(w.exponent > 0.0);
    }

    #[test]
    fn critical_radius_bracketing() {
        let (a, b) = example();
        for hyp in [Hypothesis::First, Hypothesis::Second] {
            let rc = critical_radius(&a, &b, 0.0, hyp).unwrap();
            let (center, dir) = match hyp {
                Hypothesis::First => (a.clone(), Direction::Max),
                Hypothesis::Second => (b.clone(), Direction::Min),
            };
            let probe = |r: f64| {
                ball_llr_extreme(&a, &b, &KlBall::new(center.clone(), r).unwrap(), dir)
                    .unwrap()
                    .value
            };
            match hyp {
                Hypothesis::First => assert!(probe(rc - 1e-6) < 0.0 && probe(rc + 1e-6) > 0.0),
                Hypothesis::Second => assert!(probe(rc - 1e-6) > 0.0 && probe(rc + 1e-6) < 0.0),
            }
        }
        let g = crate::simplex::llr_gap(&a, &a, &b).unwrap();
        assert_eq!(critical_radius(&a, &b, g, Hypothesis::First).unwrap(), 0.0);
        assert_eq!(
            critical_radius(&a, &b, 2.5, Hypothesis::First).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn degenerate_center() {
        let (a, _) = example();
        let w = worst_case_exponent_1(&a, &a, 0.1, 0.01, &tol()).unwrap();
        assert_eq!(w.status, WorstCaseStatus::CenterDegenerate);
        assert_eq!(w.exponent, f64::INFINITY);
        let w = worst_case_exponent_1(&a, &a, -0.1, 0.01, &tol()).unwrap();
        assert_eq!(w.exponent, 0.0);
    }

    #[test]
    fn interior_solution_satisfies_invariants() {
        let (a, b) = example();
        for r in [1e-8, 0.001, 0.005, 0.01] {
            for hyp in [Hypothesis::First, Hypothesis::Second] {
                let w = worst_case_exponent(&a, &b, 0.0, r, hyp, &tol()).unwrap();
                assert_eq!(w.status, WorstCaseStatus::Interior);
                assert!(w.kkt.max() < 1e-9, "{:?}", w.kkt);
                assert!(
                    (w.exponent - kl_unchecked(w.q_opt.probs(), w.p_least.probs())).abs() < 1e-12
                );
                let dual = worst_case_exponent_dual(&a, &b, 0.0, r, hyp).unwrap();
                assert!(
                    (dual - w.exponent).abs() < 1e-8,
                    "r={r} {hyp:?}: {dual} vs {}",
                    w.exponent
                );
            }
        }
    }

    #[test]
    fn exponent_nonincreasing_in_radius() {
        let (a, b) = example();
        let mut prev = f64::INFINITY;
        for i in 0..30 {
            let r = 0.0005 * i as f64;
            let e = worst_case_exponent_1(&a, &b, 0.0, r, &tol())
                .unwrap()
                .exponent;
            assert!(e <= prev + 1e-12);
            prev = e;
        }
    }

    #[test]
    fn cancellation_is_honored() {
        let (a, b) = example();
        let token = CancelToken::new();
        token.cancel();
        let solver = WorstCaseSolver::new(tol()).with_cancel(token);
        assert!(matches!(
            solver.solve(&a, &b, 0.0, 0.01, Hypothesis::First),
            Err(Error::Cancelled)
        ));
    }

    /// A random point with `D(center || P) <= radius`.
    fn sample_in_ball(rng: &mut ChaCha8Rng, center: &Distribution, radius: f64) -> Distribution {
        loop {
            let dir: Vec<f64> = (0..center.alphabet_size())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let scale = rng.random_range(0.0..1.0f64).sqrt() * 3.0 * radius.sqrt();
            let w: Vec<f64> = center
                .probs()
                .iter()
                .zip(&dir)
                .map(|(c, x)| c * (scale * x).exp())
                .collect();
            let p = Distribution::from_weights(w).unwrap();
            if kl_unchecked(center.probs(), p.probs()) <= radius {
                return p;
            }
        }
    }

    fn arb_problem() -> impl Strategy<Value = (Distribution, Distribution, f64, f64, u64)> {
        (2usize..4).prop_flat_map(|k| {
            let v = proptest::collection::vec(0.1f64..1.0, k);
            (v.clone(), v, 0.2f64..0.8, 1e-4f64..0.02, any::<u64>()).prop_filter_map(
                "well-separated test pair",
                |(x, y, u, r, seed)| {
                    let a = Distribution::from_weights(x).ok()?;
                    let b = Distribution::from_weights(y).ok()?;
                    if a.sup_distance(&b) < 0.1 {
                        return None;
                    }
                    let range = crate::lrt::ThresholdRange::new(&a, &b).ok()?;
                    Some((a, b, range.lerp(u), r, seed))
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn sandwich_and_convexity((a, b, gamma, r, seed) in arb_problem()) {
            let w = worst_case_exponent_1(&a, &b, gamma, r, &tol()).unwrap();
            let test = MismatchedTest::new(a.clone(), b.clone(), gamma).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let p = sample_in_ball(&mut rng, &a, r);
                let e = mismatched_exponent_1(&p, &test).unwrap().exponent;
                prop_assert!(e >= w.exponent - 1e-7);
            }
            if w.status == WorstCaseStatus::Interior {
                prop_assert!(w.kkt.max() < KKT_TOL);
                let region = test.first_error_region();
                let ball = KlBall::new(a.clone(), r).unwrap();
                let mut checked = 0;
                while checked < 50 {
                    let step = 10f64.powf(rng.random_range(-6.0..-2.0));
                    let dq: Vec<f64> = (0..a.alphabet_size()).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let dp: Vec<f64> = (0..a.alphabet_size()).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let q = Distribution::from_weights(w.q_opt.probs().iter().zip(&dq).map(|(x, e)| x * (step * e).exp()).collect()).unwrap();
                    let p = Distribution::from_weights(w.p_least.probs().iter().zip(&dp).map(|(x, e)| x * (step * e).exp()).collect()).unwrap();
                    if !region.contains(q.probs()) || !ball.contains(&p) {
                        continue;
                    }
                    checked += 1;
                    prop_assert!(kl_unchecked(q.probs(), p.probs()) >= w.exponent - 1e-9);
                }
            }
        }

        #[test]
        fn fixed_point_matches_saddle_dual((a, b, gamma, r, _seed) in arb_problem()) {
            for hyp in [Hypothesis::First, Hypothesis::Second] {
                let w = worst_case_exponent(&a, &b, gamma, r, hyp, &tol()).unwrap();
                let dual = worst_case_exponent_dual(&a, &b, gamma, r, hyp).unwrap();
                prop_assert!((w.exponent - dual).abs() < 1e-8, "{} vs {}", w.exponent, dual);
            }
        }
    }
}
