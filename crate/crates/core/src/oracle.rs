//! Brute-force reference computations: exhaustive simplex grids, exact
//! finite-`n` error probabilities by enumerating types, and Monte Carlo
//! simulation of the test.
//!
//! Nothing here shares code with the analytic solvers beyond the basic
//! divergence and statistic evaluations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mismatch::MismatchedTest;
use crate::numeric::CompensatedSum;
use crate::simplex::{check_dims, kl_unchecked, Compositions, Distribution};
use crate::worst_case::Hypothesis;

/// Largest number of types [`exact_error_probs`] will enumerate.
pub const TYPE_BUDGET: u128 = 10_000_000;

/// Trials per independent random stream in [`monte_carlo_errors`].
const MC_CHUNK: u64 = 4096;

/// A rectangular grid over the probability simplex.
///
/// Each axis has `points_per_dim` points between `floor` and `1 - floor`.
/// After the full scan, `zoom_levels` further passes rescan a window of a
/// few cells around the incumbent with the same number of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_dim: usize,
    pub floor: f64,
    pub zoom_levels: usize,
}

impl GridSpec {
    pub fn new(points_per_dim: usize, floor: f64, zoom_levels: usize) -> Result<Self> {
        if points_per_dim < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 points per dimension, got {points_per_dim}"
            )));
        }
        if !(floor > 0.0 && floor < 0.5) {
            return Err(Error::Argument(format!(
                "floor must lie in (0, 1/2), got {floor}"
            )));
        }
        Ok(Self {
            points_per_dim,
            floor,
            zoom_levels,
        })
    }

    fn check_alphabet(&self, k: usize) -> Result<()> {
        if self.floor > 1.0 / k as f64 {
            return Err(Error::Argument(format!(
                "floor {} exceeds 1/{k}",
                self.floor
            )));
        }
        Ok(())
    }
}

/// Half-width of the zoom window in cells of the previous level.
const ZOOM_CELLS: f64 = 3.0;

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Axis {
    fn at(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
    }

    fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    fn zoom(&self, center: f64, floor: f64) -> Axis {
        let w = ZOOM_CELLS * self.step();
        Axis {
            lo: (center - w).max(floor),
            hi: (center + w).min(1.0 - floor),
            n: self.n,
        }
    }
}

/// `(value, index)` minimum with ties broken by the smaller index, so the
/// parallel reduction is order independent.
fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

const NONE: (f64, usize) = (f64::INFINITY, usize::MAX);

/// Which side of the threshold the search is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `statistic >= γ̂` (the region deciding hypothesis 2).
    AtLeast,
    /// `statistic <= γ̂`.
    AtMost,
}

impl Side {
    fn admits(self, stat: f64, gamma: f64) -> bool {
        match self {
            Side::AtLeast => stat >= gamma,
            Side::AtMost => stat <= gamma,
        }
    }

    pub fn for_hypothesis(hyp: Hypothesis) -> Self {
        match hyp {
            Hypothesis::First => Side::AtLeast,
            Hypothesis::Second => Side::AtMost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMin {
    pub value: f64,
    pub argmin: Vec<f64>,
}

fn statistic(q: &[f64], coef: &[f64]) -> f64 {
    q.iter().zip(coef).map(|(a, b)| a * b).sum()
}

/// Scans one- or two-dimensional coordinates, mapping each to a point of
/// the simplex, and returns the best admissible point.
fn scan<F>(axes: &[Axis], objective: &F) -> (f64, Vec<f64>)
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    match axes {
        [x] => {
            let best = (0..x.n)
                .into_par_iter()
                .map(|i| match objective(&[x.at(i)]) {
                    Some(v) => (v, i),
                    None => NONE,
                })
                .reduce(|| NONE, better);
            let coords = if best.1 == usize::MAX {
                vec![]
            } else {
                vec![x.at(best.1)]
            };
            (best.0, coords)
        }
        [x, y] => {
            let best = (0..x.n)
                .into_par_iter()
                .map(|i| {
                    let xi = x.at(i);
                    (0..y.n).fold(NONE, |acc, j| match objective(&[xi, y.at(j)]) {
                        Some(v) => better(acc, (v, i * y.n + j)),
                        None => acc,
                    })
                })
                .reduce(|| NONE, better);
            let coords = if best.1 == usize::MAX {
                vec![]
            } else {
                vec![x.at(best.1 / y.n), y.at(best.1 % y.n)]
            };
            (best.0, coords)
        }
        _ => unreachable!("grid scans are one- or two-dimensional"),
    }
}

fn zoomed_scan<F>(grid: &GridSpec, mut axes: Vec<Axis>, objective: F) -> Option<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let (mut value, mut coords) = scan(&axes, &objective);
    if coords.is_empty() {
        return None;
    }
    for _ in 0..grid.zoom_levels {
        axes = axes
            .iter()
            .zip(&coords)
            .map(|(a, c)| a.zoom(*c, grid.floor))
            .collect();
        let (v, c) = scan(&axes, &objective);
        if !c.is_empty() && v <= value {
            value = v;
            coords = c;
        }
    }
    Some((value, coords))
}

/// Maps grid coordinates to a simplex point; `None` when the last entry
/// would fall below the floor.
fn to_simplex(coords: &[f64], floor: f64) -> Option<Vec<f64>> {
    let rest = 1.0 - coords.iter().sum::<f64>();
    if rest < floor {
        return None;
    }
    let mut v = coords.to_vec();
    v.push(rest);
    Some(v)
}

/// `min D(Q || p)` over grid points `Q` with `statistic(Q)` on `side` of
/// the test threshold. Alphabets of size 2 and 3.
pub fn grid_min_kl_halfspace(
    p: &Distribution,
    test: &MismatchedTest,
    side: Side,
    grid: &GridSpec,
) -> Result<GridMin> {
    let k = p.alphabet_size();
    check_dims(test.alphabet_size(), k)?;
    if !(2..=3).contains(&k) {
        return Err(Error::Argument(format!(
            "grid search supports 2 or 3 symbols, got {k}"
        )));
    }
    grid.check_alphabet(k)?;
    let coef = test.coefficients();
    let gamma = test.gamma();
    let axis = Axis {
        lo: grid.floor,
        hi: 1.0 - grid.floor,
        n: grid.points_per_dim,
    };
    let objective = |c: &[f64]| {
        let q = to_simplex(c, grid.floor)?;
        side.admits(statistic(&q, &coef), gamma)
            .then(|| kl_unchecked(&q, p.probs()))
    };
    let (value, coords) = zoomed_scan(grid, vec![axis; k - 1], objective).ok_or_else(|| {
        Error::Infeasible("no grid point satisfies the threshold constraint".into())
    })?;
    Ok(GridMin {
        value,
        argmin: to_simplex(&coords, 0.0).expect("incumbent is admissible"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorstCase {
    pub value: f64,
    pub p_arg: Vec<f64>,
    pub q_arg: Vec<f64>,
}

/// Joint grid minimum of `D(Q || P)` over `D(center || P) <= R` and `Q` in
/// the error region of `hyp`. Binary alphabets only.
pub fn grid_worst_case(
    p_hat1: &Distribution,
    p_hat2: &Distribution,
    gamma: f64,
    radius: f64,
    hyp: Hypothesis,
    grid: &GridSpec,
) -> Result<GridWorstCase> {
    if p_hat1.alphabet_size() != 2 || p_hat2.alphabet_size() != 2 {
        return Err(Error::Argument("the worst-case grid is binary only".into()));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Argument(format!(
            "radius must be finite and >= 0, got {radius}"
        )));
    }
    let test = MismatchedTest::new(p_hat1.clone(), p_hat2.clone(), gamma)?;
    let center = match hyp {
        Hypothesis::First => p_hat1,
        Hypothesis::Second => p_hat2,
    };
    let side = Side::for_hypothesis(hyp);
    if radius == 0.0 {
        let m = grid_min_kl_halfspace(center, &test, side, grid)?;
        return Ok(GridWorstCase {
            value: m.value,
            p_arg: center.probs().to_vec(),
            q_arg: m.argmin,
        });
    }
    grid.check_alphabet(2)?;
    let coef = test.coefficients();
    let axis = Axis {
        lo: grid.floor,
        hi: 1.0 - grid.floor,
        n: grid.points_per_dim,
    };
    // Coordinates are (P(0), Q(0)).
    let objective = |c: &[f64]| {
        let p = [c[0], 1.0 - c[0]];
        let q = [c[1], 1.0 - c[1]];
        if kl_unchecked(center.probs(), &p) > radius || !side.admits(statistic(&q, &coef), gamma) {
            return None;
        }
        Some(kl_unchecked(&q, &p))
    };
    let (value, c) = zoomed_scan(grid, vec![axis; 2], objective)
        .ok_or_else(|| Error::Infeasible("no admissible (P, Q) grid pair".into()))?;
    Ok(GridWorstCase {
        value,
        p_arg: vec![c[0], 1.0 - c[0]],
        q_arg: vec![c[1], 1.0 - c[1]],
    })
}

/// Exact error probabilities at block length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteNResult {
    pub eps1: f64,
    pub eps2: f64,
    pub n: u64,
    /// `-ln(eps1) / n`, computed from the log-domain sum so it stays finite
    /// when `eps1` underflows.
    pub slope1: f64,
    pub slope2: f64,
}

/// Streaming `log Σ exp(t)` with compensated accumulation.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    acc: CompensatedSum,
}

impl LogSum {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            acc: CompensatedSum::new(),
        }
    }

    fn add(&mut self, t: f64) {
        if t == f64::NEG_INFINITY {
            return;
        }
        if t > self.max {
            let scale = (self.max - t).exp();
            let old = self.acc.value() * scale;
            self.acc = CompensatedSum::new();
            self.acc.add(old);
            self.max = t;
        }
        self.acc.add((t - self.max).exp());
    }

    fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.acc.value().ln()
        }
    }
}

fn log_factorials(n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = CompensatedSum::new();
    out.push(0.0);
    for i in 1..=n {
        acc.add((i as f64).ln());
        out.push(acc.value());
    }
    out
}

fn check_budget(n: u64, k: usize) -> Result<()> {
    let count = Compositions::count(n, k);
    if count > TYPE_BUDGET {
        return Err(Error::Budget {
            count,
            budget: TYPE_BUDGET,
        });
    }
    Ok(())
}

fn log_type_prob(counts: &[u64], log_p: &[f64], lf: &[f64], n: u64) -> f64 {
    let mut s = CompensatedSum::new();
    s.add(lf[n as usize]);
    for (c, lp) in counts.iter().zip(log_p) {
        s.add(-lf[*c as usize]);
        if *c > 0 {
            s.add(*c as f64 * lp);
        }
    }
    s.value()
}

/// Sums the probability of every type of length `n`: `ε1` over types the
/// test assigns to hypothesis 2 under `p1`, `ε2` over the rest under `p2`.
pub fn exact_error_probs(
    p1: &Distribution,
    p2: &Distribution,
    test: &MismatchedTest,
    n: u64,
) -> Result<FiniteNResult> {
    let k = test.alphabet_size();
    check_dims(k, p1.alphabet_size())?;
    check_dims(k, p2.alphabet_size())?;
    if n == 0 {
        return Err(Error::Argument("n must be positive".into()));
    }
    check_budget(n, k)?;
    let lf = log_factorials(n);
    let (l1, l2) = (p1.log_probs(), p2.log_probs());
    let (mut e1, mut e2) = (LogSum::new(), LogSum::new());
    let nf = n as f64;
    let mut t = vec![0.0; k];
    for counts in Compositions::new(n, k) {
        for (ti, c) in t.iter_mut().zip(&counts) {
            *ti = *c as f64 / nf;
        }
        if test.decides_second(&t) {
            e1.add(log_type_prob(&counts, &l1, &lf, n));
        } else {
            e2.add(log_type_prob(&counts, &l2, &lf, n));
        }
    }
    let (le1, le2) = (e1.value().min(0.0), e2.value().min(0.0));
    Ok(FiniteNResult {
        eps1: le1.exp(),
        eps2: le2.exp(),
        n,
        slope1: -le1 / nf,
        slope2: -le2 / nf,
    })
}

/// `Σ_types P^n(type class)`, which is 1 up to rounding.
pub fn total_type_mass(p: &Distribution, n: u64) -> Result<f64> {
    check_budget(n, p.alphabet_size())?;
    let lf = log_factorials(n);
    let lp = p.log_probs();
    let mut s = LogSum::new();
    for counts in Compositions::new(n, p.alphabet_size()) {
        s.add(log_type_prob(&counts, &lp, &lf, n));
    }
    Ok(s.value().exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub seed: u64,
    pub trials: u64,
    pub n: u64,
}

impl SimulationConfig {
    pub fn new(seed: u64, trials: u64, n: u64) -> Result<Self> {
        if trials < 1 || n < 1 {
            return Err(Error::Argument("trials and n must be positive".into()));
        }
        Ok(Self { seed, trials, n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub eps1_hat: f64,
    pub eps2_hat: f64,
    /// Binomial standard errors `sqrt(ε̂(1 - ε̂) / trials)`.
    pub stderr1: f64,
    pub stderr2: f64,
    pub trials: u64,
}

/// Draws the type of `n` i.i.d. symbols from `p` by sequential binomials.
fn sample_type(rng: &mut ChaCha8Rng, p: &[f64], n: u64, counts: &mut [u64]) {
    let mut left = n;
    let mut mass = 1.0;
    let last = p.len() - 1;
    for (i, pi) in p.iter().enumerate() {
        if i == last || left == 0 {
            counts[i] = left;
            left = 0;
            continue;
        }
        let prob = (pi / mass).clamp(0.0, 1.0);
        let c = Binomial::new(left, prob)
            .expect("probability in [0, 1]")
            .sample(rng);
        counts[i] = c;
        left -= c;
        mass -= pi;
    }
}

/// Estimates both error probabilities from `sim.trials` length-`n` samples
/// under each hypothesis.
///
/// Trials are split into fixed-size chunks, each driven by its own stream of
/// a ChaCha generator seeded with `sim.seed`, so results do not depend on
/// the number of worker threads.
pub fn monte_carlo_errors(
    p1: &Distribution,
    p2: &Distribution,
    test: &MismatchedTest,
    sim: &SimulationConfig,
) -> Result<MonteCarloResult> {
    let k = test.alphabet_size();
    check_dims(k, p1.alphabet_size())?;
    check_dims(k, p2.alphabet_size())?;
    if sim.trials < 100 {
        return Err(Error::Argument(format!(
            "need at least 100 trials, got {}",
            sim.trials
        )));
    }
    let chunks = sim.trials.div_ceil(MC_CHUNK);
    let nf = sim.n as f64;
    let (miss1, miss2) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
            rng.set_stream(chunk);
            let size = MC_CHUNK.min(sim.trials - chunk * MC_CHUNK);
            let mut counts = vec![0u64; k];
            let mut t = vec![0.0; k];
            let (mut a, mut b) = (0u64, 0u64);
            for _ in 0..size {
                sample_type(&mut rng, p1.probs(), sim.n, &mut counts);
                for (ti, c) in t.iter_mut().zip(&counts) {
                    *ti = *c as f64 / nf;
                }
                a += test.decides_second(&t) as u64;
                sample_type(&mut rng, p2.probs(), sim.n, &mut counts);
                for (ti, c) in t.iter_mut().zip(&counts) {
                    *ti = *c as f64 / nf;
                }
                b += (!test.decides_second(&t)) as u64;
            }
            (a, b)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    let trials = sim.trials as f64;
    let (e1, e2) = (miss1 as f64 / trials, miss2 as f64 / trials);
    Ok(MonteCarloResult {
        eps1_hat: e1,
        eps2_hat: e2,
        stderr1: (e1 * (1.0 - e1) / trials).sqrt(),
        stderr2: (e2 * (1.0 - e2) / trials).sqrt(),
        trials: sim.trials,
    })
}
