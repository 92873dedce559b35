use rayon::prelude::*;

use super::config::{linspace, ExperimentConfig};
use super::table::{Cell, Table};
use crate::error::{Error, Result};
use crate::lrt::{dual_exponent_1, dual_exponent_2, matched_exponents, ThresholdRange};
use crate::mismatch::{
    mismatched_exponents, on_matched_curve, stein_threshold, MismatchedTest, ON_CURVE_TOL,
};
use crate::oracle::{monte_carlo_errors, SimulationConfig};
use crate::sensitivity::{
    quadratic_worst_case, sensitivity_coefficients, sensitivity_monotonicity_scan,
    taylor_worst_case, taylor_worst_case_raw,
};
use crate::simplex::{llr_gap, Distribution, ToleranceConfig};
use crate::worst_case::{critical_radius, worst_case_exponent, Hypothesis, WorstCaseStatus};

fn status_name(s: WorstCaseStatus) -> &'static str {
    match s {
        WorstCaseStatus::Interior => "interior",
        WorstCaseStatus::ZeroExponent => "zero_exponent",
        WorstCaseStatus::CenterDegenerate => "center_degenerate",
    }
}

fn vector(d: &Distribution) -> Cell {
    d.probs().into()
}

/// Matched exponents of `(p1, p2)`: primal, dual and their gaps.
pub fn cmd_exponents(cfg: &ExperimentConfig) -> Result<Table> {
    let (p1, p2) = (&cfg.p1, &cfg.p2);
    let mut t = Table::new(
        "exponents",
        &[
            "gamma", "in_range", "e1", "e2", "dual1", "dual2", "gap1", "gap2", "lambda1",
            "lambda2", "q1", "q2", "zero_e1", "zero_e2",
        ],
    );
    let gamma = cfg.gamma_value(p1, p1, p2)?;
    let m = matched_exponents(p1, p2, gamma)?;
    let d1 = dual_exponent_1(p1, p2, gamma)?;
    let d2 = dual_exponent_2(p1, p2, gamma)?;
    t.push(vec![
        gamma.into(),
        ThresholdRange::new(p1, p2)?.contains(gamma).into(),
        m.e1.into(),
        m.e2.into(),
        d1.into(),
        d2.into(),
        (m.e1 - d1).abs().into(),
        (m.e2 - d2).abs().into(),
        m.lambda1.into(),
        m.lambda2.into(),
        vector(&m.q1),
        vector(&m.q2),
        (m.e1 == 0.0).into(),
        (m.e2 == 0.0).into(),
    ]);
    Ok(t)
}

/// Exponents of the test `(p̂1, p̂2, γ̂)` under `(p1, p2)`.
pub fn cmd_mismatched(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(
        "mismatched",
        &[
            "gamma",
            "e1",
            "e2",
            "lambda1",
            "lambda2",
            "q1",
            "q2",
            "p1_outside_region1",
            "p2_outside_region2",
            "on_matched_curve",
        ],
    );
    let gamma = cfg.gamma_value(&cfg.p1, &cfg.p_hat1, &cfg.p_hat2)?;
    let test = MismatchedTest::new(cfg.p_hat1.clone(), cfg.p_hat2.clone(), gamma)?;
    let pt = mismatched_exponents(&cfg.p1, &cfg.p2, &test)?;
    let on_curve = if cfg.p1 == cfg.p2 {
        Cell::Empty
    } else {
        on_matched_curve(&cfg.p1, &cfg.p2, pt.e1, pt.e2, ON_CURVE_TOL)?.into()
    };
    t.push(vec![
        gamma.into(),
        pt.e1.into(),
        pt.e2.into(),
        pt.lambda1.into(),
        pt.lambda2.into(),
        vector(&pt.q1),
        vector(&pt.q2),
        (test.statistic(cfg.p1.probs()) < gamma).into(),
        (test.statistic(cfg.p2.probs()) > gamma).into(),
        on_curve,
    ]);
    Ok(t)
}

/// Stein-regime thresholds per block length, with optional Monte Carlo
/// estimates of the type-I error at each threshold.
pub fn cmd_stein(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(
        "stein",
        &[
            "n",
            "epsilon",
            "threshold",
            "limit_threshold",
            "variance",
            "c_hat2",
            "exponent",
            "mc_eps1",
            "mc_stderr1",
            "mc_trials",
        ],
    );
    let (p1, p2, h1, h2) = (&cfg.p1, &cfg.p2, &cfg.p_hat1, &cfg.p_hat2);
    let limit = llr_gap(p1, h1, h2)?;
    let test = MismatchedTest::new(h1.clone(), h2.clone(), limit)?;
    let exponent = crate::mismatch::mismatched_exponent_2(p2, &test)?.exponent;
    let rows = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let (threshold, variance, c_hat2) = stein_threshold(p1, h1, h2, cfg.epsilon, n)?;
            let mc = if cfg.trials > 0 {
                let sim = SimulationConfig::new(cfg.seed, cfg.trials, n)?;
                Some(monte_carlo_errors(
                    p1,
                    p2,
                    &test.with_gamma(threshold),
                    &sim,
                )?)
            } else {
                None
            };
            Ok(vec![
                n.into(),
                cfg.epsilon.into(),
                threshold.into(),
                limit.into(),
                variance.into(),
                c_hat2.into(),
                exponent.into(),
                mc.map(|m| m.eps1_hat).into(),
                mc.map(|m| m.stderr1).into(),
                mc.map(|m| m.trials).into(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    for r in rows {
        t.push(r);
    }
    Ok(t)
}

pub const WORST_CASE_DEFAULT_RADII: [f64; 4] = [0.0, 0.001, 0.005, 0.01];

/// Worst-case exponents for both hypotheses at every configured radius.
pub fn cmd_worst_case(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(
        "worst-case",
        &[
            "hypothesis",
            "radius",
            "exponent",
            "status",
            "lambda",
            "beta",
            "p_least",
            "q_opt",
            "critical_radius",
            "kkt_residual",
        ],
    );
    let (h1, h2) = (&cfg.p_hat1, &cfg.p_hat2);
    let gamma = cfg.gamma_value(h1, h1, h2)?;
    let radii = cfg.radii_or(WORST_CASE_DEFAULT_RADII.to_vec());
    let tol = ToleranceConfig::default();
    let jobs: Vec<(Hypothesis, f64)> = [Hypothesis::First, Hypothesis::Second]
        .iter()
        .flat_map(|h| radii.iter().map(move |r| (*h, *r)))
        .collect();
    let crit = [
        critical_radius(h1, h2, gamma, Hypothesis::First)?,
        critical_radius(h1, h2, gamma, Hypothesis::Second)?,
    ];
    let rows = jobs
        .par_iter()
        .map(|&(hyp, r)| {
            let w = worst_case_exponent(h1, h2, gamma, r, hyp, &tol)?;
            Ok(vec![
                hyp.index().into(),
                r.into(),
                w.exponent.into(),
                status_name(w.status).into(),
                w.lambda.into(),
                w.beta.into(),
                vector(&w.p_least),
                vector(&w.q_opt),
                crit[hyp.index() - 1].into(),
                w.kkt.max().into(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    for r in rows {
        t.push(r);
    }
    Ok(t)
}

pub const SENSITIVITY_DEFAULT_RADII: [f64; 3] = [1e-6, 1e-4, 1e-3];

/// Sensitivity coefficients at the configured threshold, the monotonicity
/// scan over the threshold range, and the quadratic-model diagnostics.
pub fn cmd_sensitivity(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(
        "sensitivity",
        &[
            "kind",
            "gamma",
            "lambda",
            "s1",
            "s2",
            "e1",
            "e2",
            "ds1",
            "ds2",
            "hypothesis",
            "radius",
            "quadratic",
            "taylor",
            "theta",
            "half_theta_j_theta",
        ],
    );
    let (h1, h2) = (&cfg.p_hat1, &cfg.p_hat2);
    let gamma = cfg.gamma_value(h1, h1, h2)?;
    let rep = sensitivity_coefficients(h1, h2, gamma)?;
    let e = Cell::Empty;
    t.push(vec![
        "point".into(),
        gamma.into(),
        rep.lambda.into(),
        rep.s1.into(),
        rep.s2.into(),
        rep.e1.into(),
        rep.e2.into(),
        e.clone(),
        e.clone(),
        e.clone(),
        e.clone(),
        e.clone(),
        e.clone(),
        e.clone(),
        e.clone(),
    ]);
    let scan = sensitivity_monotonicity_scan(h1, h2, cfg.grid_points)?;
    let mut prev: Option<(f64, f64)> = None;
    for row in &scan.rows {
        let (ds1, ds2) = match prev {
            Some((a, b)) => (Cell::Num(row.s1 - a), Cell::Num(row.s2 - b)),
            None => (Cell::Empty, Cell::Empty),
        };
        prev = Some((row.s1, row.s2));
        t.push(vec![
            "scan".into(),
            row.gamma.into(),
            row.lambda.into(),
            row.s1.into(),
            row.s2.into(),
            row.e1.into(),
            row.e2.into(),
            ds1,
            ds2,
            e.clone(),
            e.clone(),
            e.clone(),
            e.clone(),
            e.clone(),
            e.clone(),
        ]);
    }
    for hyp in [Hypothesis::First, Hypothesis::Second] {
        for r in cfg.radii_or(SENSITIVITY_DEFAULT_RADII.to_vec()) {
            let (quadratic, theta, form) = match quadratic_worst_case(h1, h2, gamma, r, hyp) {
                Ok((v, m)) => (
                    Cell::Num(v),
                    Cell::Vector(m.theta.clone()),
                    Cell::Num(m.quadratic_form()),
                ),
                Err(Error::Domain(_)) => (Cell::Empty, Cell::Empty, Cell::Empty),
                Err(other) => return Err(other),
            };
            t.push(vec![
                "quadratic".into(),
                gamma.into(),
                rep.lambda.into(),
                rep.s1.into(),
                rep.s2.into(),
                rep.e1.into(),
                rep.e2.into(),
                e.clone(),
                e.clone(),
                hyp.index().into(),
                r.into(),
                quadratic,
                taylor_worst_case_raw(h1, h2, gamma, r, hyp)?.into(),
                theta,
                form,
            ]);
        }
    }
    Ok(t)
}

pub fn bayes_sweep_default_radii() -> Vec<f64> {
    linspace(0.0, 0.01, 101)
}

/// Exact and first-order worst-case Bayes exponents as the radius grows,
/// with `R1 = R2 = R`.
pub fn cmd_figure2(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(
        "figure2",
        &[
            "r",
            "exact_e1",
            "exact_e2",
            "exact_bayes",
            "taylor_e1",
            "taylor_e2",
            "taylor_bayes",
            "status1",
            "status2",
            "slope",
        ],
    );
    let (h1, h2) = (&cfg.p_hat1, &cfg.p_hat2);
    let gamma = cfg.gamma_value(h1, h1, h2)?;
    let radii = cfg.radii_or(bayes_sweep_default_radii());
    let tol = ToleranceConfig::default();
    let at_zero = {
        let a = worst_case_exponent(h1, h2, gamma, 0.0, Hypothesis::First, &tol)?.exponent;
        let b = worst_case_exponent(h1, h2, gamma, 0.0, Hypothesis::Second, &tol)?.exponent;
        a.min(b)
    };
    let rows = radii
        .par_iter()
        .map(|&r| {
            let w1 = worst_case_exponent(h1, h2, gamma, r, Hypothesis::First, &tol)?;
            let w2 = worst_case_exponent(h1, h2, gamma, r, Hypothesis::Second, &tol)?;
            let t1 = taylor_worst_case(h1, h2, gamma, r, Hypothesis::First)?;
            let t2 = taylor_worst_case(h1, h2, gamma, r, Hypothesis::Second)?;
            let exact = w1.exponent.min(w2.exponent);
            let slope = if r > 0.0 {
                Cell::Num((at_zero - exact) / r.sqrt())
            } else {
                Cell::Empty
            };
            Ok(vec![
                r.into(),
                w1.exponent.into(),
                w2.exponent.into(),
                exact.into(),
                t1.into(),
                t2.into(),
                t1.min(t2).into(),
                status_name(w1.status).into(),
                status_name(w2.status).into(),
                slope,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    for r in rows {
        t.push(r);
    }
    Ok(t)
}
