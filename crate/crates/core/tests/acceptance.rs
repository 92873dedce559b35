//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a nonzero status if any of them fails.
//!
//! Run alone with `cargo test --test acceptance`.

use std::time::Instant;

use mismatch_lrt::lrt::{dual_exponent_1, dual_exponent_2, ThresholdRange};
use mismatch_lrt::mismatch::{
    matched_tradeoff_e2, mismatched_exponent_1, mismatched_exponent_2, mismatched_exponents,
    remark1_tilted_optimality_check, stein_mismatched, stein_threshold, test_threshold_range,
};
use mismatch_lrt::oracle::{
    exact_error_probs, grid_min_kl_halfspace, grid_worst_case, monte_carlo_errors, GridSpec, Side,
    SimulationConfig,
};
use mismatch_lrt::sensitivity::{
    directional_difference, exponent_gradient, quadratic_worst_case, sensitivity_coefficients,
    sensitivity_monotonicity_scan, taylor_worst_case, taylor_worst_case_raw,
};
use mismatch_lrt::simplex::{bhattacharyya, llr_gap, tilt};
use mismatch_lrt::worst_case::worst_case_exponent;
use mismatch_lrt::{
    kl, matched_exponents, Distribution, Hypothesis, MismatchedTest, Result, ToleranceConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<Outcome>;

const BOTH: [Hypothesis; 2] = [Hypothesis::First, Hypothesis::Second];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn d(v: &[f64]) -> Distribution {
    Distribution::new(v.to_vec()).expect("valid distribution")
}

/// `Bern(0.1)` and `Bern(0.8)`.
fn example() -> (Distribution, Distribution) {
    (d(&[0.9, 0.1]), d(&[0.2, 0.8]))
}

fn random_dist(rng: &mut ChaCha8Rng, k: usize) -> Distribution {
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    Distribution::from_weights(w).expect("positive weights")
}

fn center(p_hat1: &Distribution, p_hat2: &Distribution, hyp: Hypothesis) -> Distribution {
    match hyp {
        Hypothesis::First => p_hat1.clone(),
        Hypothesis::Second => p_hat2.clone(),
    }
}

fn nonincreasing(v: &[f64], slack: f64) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + slack)
}

fn duality() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let k = [2, 3, 5][i % 3];
        let (p1, p2) = (random_dist(&mut rng, k), random_dist(&mut rng, k));
        let gamma = ThresholdRange::new(&p1, &p2)?.lerp(rng.random::<f64>());
        let m = matched_exponents(&p1, &p2, gamma)?;
        worst = worst
            .max((m.e1 - dual_exponent_1(&p1, &p2, gamma)?).abs())
            .max((m.e2 - dual_exponent_2(&p1, &p2, gamma)?).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-8 && secs < 5.0,
        format!("max |primal - dual| = {worst:.2e} over 200 instances, {secs:.2} s"),
    )
}

fn bhattacharyya_identity() -> Result<Outcome> {
    let (h1, h2) = example();
    let gamma = llr_gap(tilt(&h1, &h1, &h2, 0.5)?, &h1, &h2)?;
    let m = matched_exponents(&h1, &h2, gamma)?;
    let ln2 = std::f64::consts::LN_2;
    let sum_err = (m.e1 + m.e2 - ln2).abs();
    let b_err = (2.0 * bhattacharyya(&h1, &h2)? - ln2).abs();
    // Reference values are quoted to six decimals (the second one truncated).
    let (d1, d2) = ((m.e1 - 0.311239).abs(), (m.e2 - 0.381908).abs());
    outcome(
        sum_err <= 1e-8 && b_err <= 1e-12 && d1 <= 1e-6 && d2 <= 1e-6,
        format!(
            "gamma = {gamma:.10}, E1 = {:.9}, E2 = {:.9}, |E1 + E2 - ln 2| = {sum_err:.1e}, |2B - ln 2| = {b_err:.1e}",
            m.e1, m.e2
        ),
    )
}

fn stein() -> Result<Outcome> {
    let (p1, p2) = example();
    let identity = stein_mismatched(&p1, &p2, &p1, &p2, 0.1, 1000)?;
    let target = kl(&p1, &p2)?;
    let id_err = (identity.exponent - target).abs();
    let ref_err = (identity.exponent - 1.145726).abs();

    let (q1, q2) = (d(&[0.5, 0.3, 0.2]), d(&[0.2, 0.3, 0.5]));
    let (h1, h2) = (d(&[0.5, 0.4, 0.1]), d(&[0.3, 0.1, 0.6]));
    let strict = stein_mismatched(&q1, &q2, &h1, &h2, 0.1, 1000)?;
    let gap = kl(&q1, &q2)? - strict.exponent;
    outcome(
        id_err <= 1e-9 && ref_err <= 5e-7 && gap >= 1e-4,
        format!(
            "identity: E2 = {:.9} vs D(P1||P2) = {target:.9} (diff {id_err:.1e}); mismatched ternary: E2 = {:.6}, shortfall {gap:.4}",
            identity.exponent, strict.exponent
        ),
    )
}

fn tilted_tests_optimal() -> Result<Outcome> {
    let (p1, p2) = example();
    let probe = MismatchedTest::new(tilt(&p1, &p1, &p2, 0.2)?, tilt(&p1, &p1, &p2, 0.7)?, 0.0)?;
    let range = test_threshold_range(&probe)?;
    let mut worst = 0.0f64;
    let mut all_on = true;
    for i in 0..=10 {
        let g = range.lerp(i as f64 / 10.0);
        let (pair, on) = remark1_tilted_optimality_check(&p1, &p2, 0.2, 0.7, g)?;
        all_on &= on;
        worst = worst.max((pair.e2 - matched_tradeoff_e2(&p1, &p2, pair.e1)?).abs());
    }
    outcome(
        all_on && worst <= 1e-6,
        format!("11 thresholds, max distance to the matched curve {worst:.2e}"),
    )
}

fn random_mismatched(
    rng: &mut ChaCha8Rng,
    k: usize,
) -> Result<(Distribution, Distribution, MismatchedTest)> {
    let (p1, p2) = (random_dist(rng, k), random_dist(rng, k));
    let (h1, h2) = (random_dist(rng, k), random_dist(rng, k));
    let gamma = ThresholdRange::new(&h1, &h2)?.lerp(rng.random_range(0.1..0.9));
    Ok((p1, p2, MismatchedTest::new(h1, h2, gamma)?))
}

fn mismatched_vs_grid() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let compare = |p1: &Distribution,
                   p2: &Distribution,
                   test: &MismatchedTest,
                   grid: &GridSpec|
     -> Result<f64> {
        let e = mismatched_exponents(p1, p2, test)?;
        let g1 = grid_min_kl_halfspace(p1, test, Side::AtLeast, grid)?.value;
        let g2 = grid_min_kl_halfspace(p2, test, Side::AtMost, grid)?.value;
        Ok((e.e1 - g1).abs().max((e.e2 - g2).abs()))
    };

    let binary_grid = GridSpec::new(1_000_000, 1e-7, 2)?;
    let mut binary = vec![(
        d(&[0.9, 0.1]),
        d(&[0.2, 0.8]),
        MismatchedTest::new(d(&[0.8, 0.2]), d(&[0.3, 0.7]), 0.0)?,
    )];
    for _ in 0..4 {
        binary.push(random_mismatched(&mut rng, 2)?);
    }
    let mut worst2 = 0.0f64;
    for (p1, p2, test) in &binary {
        worst2 = worst2.max(compare(p1, p2, test, &binary_grid)?);
    }

    let ternary_grid = GridSpec::new(1000, 1e-6, 3)?;
    let mut ternary = vec![(
        d(&[0.5, 0.3, 0.2]),
        d(&[0.2, 0.3, 0.5]),
        MismatchedTest::new(d(&[0.5, 0.4, 0.1]), d(&[0.3, 0.1, 0.6]), 0.0)?,
    )];
    for _ in 0..2 {
        ternary.push(random_mismatched(&mut rng, 3)?);
    }
    let mut worst3 = 0.0f64;
    for (p1, p2, test) in &ternary {
        worst3 = worst3.max(compare(p1, p2, test, &ternary_grid)?);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst2 <= 1e-6 && worst3 <= 1e-4 && secs < 60.0,
        format!(
            "binary ({} instances) max gap {worst2:.2e}, ternary ({} instances) max gap {worst3:.2e}, {secs:.1} s",
            binary.len(),
            ternary.len()
        ),
    )
}

fn worst_case_vs_grid() -> Result<Outcome> {
    let (h1, h2) = example();
    let tol = ToleranceConfig::default();
    let grid = GridSpec::new(2000, 1e-6, 3)?;
    let test = MismatchedTest::new(h1.clone(), h2.clone(), 0.0)?;
    let (mut grid_gap, mut kkt, mut reduce_gap) = (0.0f64, 0.0f64, 0.0f64);
    let mut monotone = true;
    for hyp in BOTH {
        let at_zero = worst_case_exponent(&h1, &h2, 0.0, 0.0, hyp, &tol)?.exponent;
        let plain = match hyp {
            Hypothesis::First => mismatched_exponent_1(&h1, &test)?.exponent,
            Hypothesis::Second => mismatched_exponent_2(&h2, &test)?.exponent,
        };
        reduce_gap = reduce_gap.max((at_zero - plain).abs());
        let mut curve = vec![at_zero];
        for r in [0.001, 0.005, 0.01] {
            let sol = worst_case_exponent(&h1, &h2, 0.0, r, hyp, &tol)?;
            let g = grid_worst_case(&h1, &h2, 0.0, r, hyp, &grid)?.value;
            grid_gap = grid_gap.max((sol.exponent - g).abs());
            kkt = kkt.max(sol.kkt.max());
            curve.push(sol.exponent);
        }
        monotone &= nonincreasing(&curve, 0.0);
    }
    outcome(
        grid_gap <= 1e-4 && kkt <= 1e-7 && reduce_gap <= 1e-9 && monotone,
        format!(
            "max |solver - grid| {grid_gap:.2e}, max KKT residual {kkt:.1e}, R = 0 gap {reduce_gap:.1e}, nonincreasing: {monotone}"
        ),
    )
}

fn small_radius_slope() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tol = ToleranceConfig::default();
    let r = 1e-8;
    let (mut slope_err, mut quad_err, mut grad_err) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..10 {
        let k = 2 + i % 2;
        let (h1, h2) = (random_dist(&mut rng, k), random_dist(&mut rng, k));
        let gamma = ThresholdRange::new(&h1, &h2)?.lerp(rng.random_range(0.2..0.8));
        let hyp = BOTH[i % 2];

        let rep = sensitivity_coefficients(&h1, &h2, gamma)?;
        let s = rep.coefficient(hyp);
        let worst = worst_case_exponent(&h1, &h2, gamma, r, hyp, &tol)?.exponent;
        let fd = (rep.exponent(hyp) - worst) / r.sqrt();
        slope_err = slope_err.max((s - fd).abs() / s);

        for radius in [1e-8, 1e-6, 1e-4] {
            let (q, _) = quadratic_worst_case(&h1, &h2, gamma, radius, hyp)?;
            quad_err =
                quad_err.max((q - taylor_worst_case_raw(&h1, &h2, gamma, radius, hyp)?).abs());
        }

        let test = MismatchedTest::new(h1.clone(), h2.clone(), gamma)?;
        let p = center(&h1, &h2, hyp);
        let g = exponent_gradient(&p, &test, hyp)?;
        let mean = g.iter().sum::<f64>() / k as f64;
        let mut v: Vec<f64> = g.iter().map(|x| x - mean).collect();
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        v.iter_mut().for_each(|x| *x /= scale);
        let shift = v.iter().sum::<f64>() / k as f64;
        v.iter_mut().for_each(|x| *x -= shift);
        let analytic: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        let numeric = directional_difference(&p, &test, hyp, &v, 1e-5)?;
        grad_err = grad_err.max((numeric - analytic).abs() / analytic.abs());
    }
    outcome(
        slope_err <= 0.02 && quad_err <= 1e-9 && grad_err <= 1e-5,
        format!(
            "10 configurations: max relative slope error {slope_err:.2e}, quadratic vs Taylor {quad_err:.1e}, gradient relative error {grad_err:.1e}"
        ),
    )
}

fn sensitivity_monotonicity() -> Result<Outcome> {
    let (h1, h2) = example();
    let scan = sensitivity_monotonicity_scan(&h1, &h2, 100)?;
    let half = llr_gap(tilt(&h1, &h1, &h2, 0.5)?, &h1, &h2)?;
    let rep = sensitivity_coefficients(&h1, &h2, half)?;
    let root2 = std::f64::consts::SQRT_2;
    let err = (rep.s1 - root2).abs().max((rep.s2 - root2).abs());
    outcome(
        scan.s1_nondecreasing(1e-9) && scan.s2_nonincreasing(1e-9) && err <= 1e-9,
        format!(
            "min dS1 = {:.3e}, max dS2 = {:.3e}, |S - sqrt 2| = {err:.1e} at the half-way tilt",
            scan.min_ds1, scan.max_ds2
        ),
    )
}

fn bayes_curve() -> Result<Outcome> {
    let start = Instant::now();
    let (h1, h2) = example();
    let tol = ToleranceConfig::default();
    let gamma = 0.0;
    let mut radii: Vec<f64> = (0..=100).map(|i| 0.01 * i as f64 / 100.0).collect();
    radii.extend([1e-10, 1e-8, 1e-6, 1e-5, 3e-5]);
    radii.sort_by(f64::total_cmp);

    let rep = sensitivity_coefficients(&h1, &h2, gamma)?;
    let s_min = rep.s1.min(rep.s2);
    let e0 = rep.e1.min(rep.e2);
    let (mut exact, mut taylor) = (Vec::new(), Vec::new());
    for &r in &radii {
        let e1 = worst_case_exponent(&h1, &h2, gamma, r, Hypothesis::First, &tol)?.exponent;
        let e2 = worst_case_exponent(&h1, &h2, gamma, r, Hypothesis::Second, &tol)?.exponent;
        exact.push(e1.min(e2));
        let t1 = taylor_worst_case(&h1, &h2, gamma, r, Hypothesis::First)?;
        let t2 = taylor_worst_case(&h1, &h2, gamma, r, Hypothesis::Second)?;
        taylor.push(t1.min(t2));
    }
    let monotone = nonincreasing(&exact, 1e-12) && nonincreasing(&taylor, 0.0);
    let (mut rel, mut min_ratio) = (0.0f64, f64::INFINITY);
    for ((&r, &e), &t) in radii.iter().zip(&exact).zip(&taylor) {
        if r > 0.0 && r <= 1e-3 {
            rel = rel.max((t - e).abs() / e);
        }
        if r > 0.0 && r <= 1e-4 {
            min_ratio = min_ratio.min((e0 - e) / r.sqrt());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        monotone && rel <= 0.1 && min_ratio >= 0.5 * s_min && secs < 120.0,
        format!(
            "{} radii, nonincreasing: {monotone}, Taylor relative error {rel:.2e} (R <= 1e-3), min slope ratio {min_ratio:.4} vs 0.5 S_min = {:.4}, {secs:.1} s",
            radii.len(),
            0.5 * s_min
        ),
    )
}

fn finite_n() -> Result<Outcome> {
    let (h1, h2) = example();
    let test = MismatchedTest::new(h1.clone(), h2.clone(), 0.0)?;
    let e1 = mismatched_exponent_1(&h1, &test)?.exponent;
    let gap100 = (exact_error_probs(&h1, &h2, &test, 100)?.slope1 - e1).abs();
    let gap500 = (exact_error_probs(&h1, &h2, &test, 500)?.slope1 - e1).abs();

    let (gamma_n, _, _) = stein_threshold(&h1, &h1, &h2, 0.1, 2000)?;
    let stein_test = test.with_gamma(gamma_n);
    let mc = monte_carlo_errors(
        &h1,
        &h2,
        &stein_test,
        &SimulationConfig::new(2024, 100_000, 2000)?,
    )?;
    outcome(
        gap500 <= 0.02 && gap500 < gap100 && (0.08..=0.12).contains(&mc.eps1_hat),
        format!(
            "exponent gap {gap100:.4} at n = 100, {gap500:.4} at n = 500; Monte Carlo type-I error {:.5} (se {:.5})",
            mc.eps1_hat, mc.stderr1
        ),
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("matched primal/dual agreement", duality),
        ("Bhattacharyya point", bhattacharyya_identity),
        ("Stein exponent", stein),
        (
            "tilted test distributions are optimal",
            tilted_tests_optimal,
        ),
        ("mismatched exponents vs grid", mismatched_vs_grid),
        ("worst-case exponents vs grid", worst_case_vs_grid),
        ("small-radius slope", small_radius_slope),
        ("sensitivity monotonicity", sensitivity_monotonicity),
        ("worst-case Bayes curve", bayes_curve),
        ("finite-n consistency", finite_n),
    ];
    let mut passed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check().unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!("error: {e}"),
        });
        passed += usize::from(out.pass);
        println!(
            "{} {:>2} {name}: {} [{:.2} s]",
            if out.pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
