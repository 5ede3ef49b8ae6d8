//! Quantitative evaluation: RMSE against a reference, log-log/log-linear
//! rate fitting, and the per-iteration distance bound check for the
//! accelerated variant.

use crate::error::{Error, Result};
use crate::solvers::{ConvergenceLog, LogColumn};

/// `sqrt(||x - ref||^2 / n)`.
pub fn rmse(x: &[f64], reference: &[f64]) -> Result<f64> {
    if x.len() != reference.len() {
        return Err(Error::dim("rmse operands", reference.len(), x.len()));
    }
    if x.is_empty() {
        return Err(Error::Config("rmse of empty vectors".into()));
    }
    let ss: f64 = x
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((ss / x.len() as f64).sqrt())
}

/// Abscissa scaling for [`fit_rate`]: power laws show up as slopes on
/// log-log axes, geometric decay on log-linear axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateScale {
    /// Fit `log(value)` against `log(n)`; slope -1 means `O(1/n)`.
    LogLog,
    /// Fit `log(value)` against `n`; slope `log(q)` means `O(q^n)`.
    LogLinear,
}

/// Least-squares fit of a decay rate over an iteration window.
#[derive(Clone, Copy, Debug)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (usize, usize),
    pub samples: usize,
}

/// Default fitting window: drop the first 10% of iterations as transient.
pub fn default_window(log: &ConvergenceLog) -> (usize, usize) {
    let last = log.records.last().map_or(0, |r| r.iter);
    ((last / 10).max(1), last)
}

/// Least-squares slope of `log(column)` over iterations in
/// `window.0..=window.1`. Requires at least 10 positive samples.
pub fn fit_rate(
    log: &ConvergenceLog,
    column: LogColumn,
    window: (usize, usize),
    scale: RateScale,
) -> Result<RateFit> {
    if window.0 < 1 || window.1 <= window.0 {
        return Err(Error::Config(format!(
            "rate window must satisfy 1 <= lo < hi, got {window:?}"
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (iter, value) in log.column(column) {
        if iter < window.0 || iter > window.1 {
            continue;
        }
        if value.is_nan() || value <= 0.0 {
            return Err(Error::Config(format!(
                "rate fit needs positive values, found {value} at iteration {iter}"
            )));
        }
        let x = match scale {
            RateScale::LogLog => (iter as f64).ln(),
            RateScale::LogLinear => iter as f64,
        };
        xs.push(x);
        ys.push(value.ln());
    }
    if xs.len() < 10 {
        return Err(Error::Config(format!(
            "rate fit needs at least 10 samples, got {}",
            xs.len()
        )));
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    Ok(RateFit {
        slope,
        intercept,
        window,
        samples: xs.len(),
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Outcome of checking the accelerated variant's per-iteration distance
/// bound `||x_n - x*||^2 + gamma_n ||v_n - v*||^2 / sigma_n <=
/// gamma_n^2 (||x_0 - x*||^2 / gamma_0^2 + ||v_0 - v*||^2 / (gamma_0 sigma_0))`.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub checked: usize,
    pub violations: usize,
    pub max_ratio: f64,
    pub first_violation: Option<usize>,
}

impl BoundReport {
    pub fn ok(&self) -> bool {
        self.violations == 0
    }
}

/// Evaluates the distance bound on every record of an accelerated-variant
/// log. The log must have been produced with both a primal and a dual
/// reference so the squared distances are present; `slack` is the accepted
/// ratio above 1 (e.g. `1e-9`).
pub fn check_bound_alg2(
    log: &ConvergenceLog,
    gamma0: f64,
    sigma0: f64,
    slack: f64,
) -> Result<BoundReport> {
    let first = log
        .records
        .first()
        .ok_or_else(|| Error::Config("empty log".into()))?;
    if first.iter != 0 {
        return Err(Error::Config("log must start at iteration 0".into()));
    }
    if !first.dist_to_ref.is_finite() || !first.dist_dual_to_ref.is_finite() {
        return Err(Error::Config(
            "bound check needs primal and dual references recorded in the log".into(),
        ));
    }
    let constant = first.dist_to_ref / (gamma0 * gamma0) + first.dist_dual_to_ref / (gamma0 * sigma0);

    let mut report = BoundReport {
        checked: 0,
        violations: 0,
        max_ratio: 0.0,
        first_violation: None,
    };
    for r in &log.records {
        if !r.dist_to_ref.is_finite() || !r.dist_dual_to_ref.is_finite() {
            return Err(Error::Config(format!(
                "missing reference distances at iteration {}",
                r.iter
            )));
        }
        let lhs = r.dist_to_ref + r.gamma * r.dist_dual_to_ref / r.sigma;
        let rhs = r.gamma * r.gamma * constant;
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
        report.checked += 1;
        report.max_ratio = report.max_ratio.max(ratio);
        if ratio > 1.0 + slack {
            report.violations += 1;
            report.first_violation.get_or_insert(r.iter);
        }
    }
    Ok(report)
}

/// Plain-text rendering of a bound report.
pub fn bound_report_text(report: &BoundReport) -> String {
    format!(
        "checked {} iterations, {} violations, max ratio {:.12}{}",
        report.checked,
        report.violations,
        report.max_ratio,
        report
            .first_violation
            .map_or(String::new(), |n| format!(", first at iteration {n}"))
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{solve, Callbacks, LogRecord, SolverConfig, Variant};
    use crate::vector::{DualVector, PrimalVector};

    fn synthetic_log<F: Fn(usize) -> f64>(n: usize, f: F) -> ConvergenceLog {
        ConvergenceLog {
            records: (0..=n)
                .map(|iter| LogRecord {
                    iter,
                    gamma: 1.0,
                    sigma: 1.0,
                    objective: f(iter.max(1)),
                    gap: f64::NAN,
                    dist_to_ref: f64::NAN,
                    residual_primal: f64::NAN,
                    residual_dual: f64::NAN,
                    wall_ms: 0.0,
                    dist_dual_to_ref: f64::NAN,
                })
                .collect(),
        }
    }

    #[test]
    fn rmse_basics() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        // difference of all-ones has rmse 1 regardless of length
        let x = vec![2.0; 17];
        let r = vec![1.0; 17];
        assert!((rmse(&x, &r).unwrap() - 1.0).abs() < 1e-15);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rmse_matches_naive_loop() {
        use rand_chacha::rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut u = || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let x: Vec<f64> = (0..33).map(|_| u()).collect();
        let r: Vec<f64> = (0..33).map(|_| u()).collect();
        let mut ss = 0.0;
        for k in 0..33 {
            ss += (x[k] - r[k]) * (x[k] - r[k]);
        }
        let expected = (ss / 33.0).sqrt();
        assert!((rmse(&x, &r).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn fit_rate_recovers_power_laws() {
        let log = synthetic_log(200, |n| 3.0 / n as f64);
        let fit = fit_rate(&log, LogColumn::Objective, (1, 200), RateScale::LogLog).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-6, "slope {}", fit.slope);

        let log = synthetic_log(200, |n| 5.0 / (n as f64 * n as f64));
        let fit = fit_rate(&log, LogColumn::Objective, (1, 200), RateScale::LogLog).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-6, "slope {}", fit.slope);
    }

    #[test]
    fn fit_rate_recovers_geometric_decay() {
        let q: f64 = 0.93;
        let log = synthetic_log(150, |n| 2.0 * q.powi(n as i32));
        let fit = fit_rate(&log, LogColumn::Objective, (1, 150), RateScale::LogLinear).unwrap();
        assert!((fit.slope - q.ln()).abs() < 1e-6);
    }

    #[test]
    fn fit_rate_scale_invariance() {
        let log_a = synthetic_log(100, |n| 1.0 / n as f64);
        let log_b = synthetic_log(100, |n| 250.0 / n as f64);
        let fa = fit_rate(&log_a, LogColumn::Objective, (1, 100), RateScale::LogLog).unwrap();
        let fb = fit_rate(&log_b, LogColumn::Objective, (1, 100), RateScale::LogLog).unwrap();
        assert!((fa.slope - fb.slope).abs() < 1e-9);
        assert!((fb.intercept - fa.intercept - 250.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn fit_rate_rejects_nonpositive_and_short_windows() {
        let log = synthetic_log(100, |n| 1.0 / n as f64 - 0.5);
        assert!(fit_rate(&log, LogColumn::Objective, (1, 100), RateScale::LogLog).is_err());
        let log = synthetic_log(5, |n| 1.0 / n as f64);
        assert!(fit_rate(&log, LogColumn::Objective, (1, 5), RateScale::LogLog).is_err());
    }

    #[test]
    fn bound_check_on_1d_quadratic_against_analytic_solution() {
        use crate::linops::DenseOp;
        use crate::problem::{DualBlockSpec, ProblemSpec, ProxMap};
        use std::sync::Arc;

        let mut spec = ProblemSpec::new(
            1,
            ProxMap::new(|x, g| x.iter().map(|a| a / (1.0 + g)).collect()),
        );
        spec.blocks.push(DualBlockSpec::new(
            ProxMap::new(|v, g| v.iter().map(|a| a / (1.0 + g)).collect()),
            Arc::new(DenseOp::scalar(1.0)),
        ));
        spec.strong_convexity_primal = 1.0;

        let config = SolverConfig {
            variant: Variant::Alg2,
            max_iters: 1000,
            rho: 1.0,
            ..Default::default()
        };
        let xref = vec![0.0];
        let vref = DualVector::new(vec![vec![0.0]]);
        let callbacks = Callbacks {
            reference: Some(&xref),
            reference_dual: Some(&vref),
            ..Default::default()
        };
        let result = solve(
            &spec,
            &config,
            PrimalVector::new(vec![2.0]),
            Some(DualVector::new(vec![vec![-1.0]])),
            &callbacks,
        )
        .unwrap();
        let g0 = result.log.records[0].gamma;
        let s0 = result.log.records[0].sigma;
        let report = check_bound_alg2(&result.log, g0, s0, 1e-9).unwrap();
        assert!(report.ok(), "{}", bound_report_text(&report));
        // tight at the start
        let first_lhs = result.log.records[0].dist_to_ref
            + g0 * result.log.records[0].dist_dual_to_ref / s0;
        let constant = result.log.records[0].dist_to_ref / (g0 * g0)
            + result.log.records[0].dist_dual_to_ref / (g0 * s0);
        assert!((first_lhs / (g0 * g0 * constant) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bound_check_flags_synthetic_violation() {
        let mut log = ConvergenceLog::default();
        for iter in 0..=5usize {
            let gamma = 1.0 / (iter as f64 + 1.0);
            log.records.push(LogRecord {
                iter,
                gamma,
                sigma: 1.0 / gamma,
                objective: f64::NAN,
                gap: f64::NAN,
                // distances that refuse to shrink violate the bound
                dist_to_ref: 1.0,
                residual_primal: f64::NAN,
                residual_dual: f64::NAN,
                wall_ms: 0.0,
                dist_dual_to_ref: 1.0,
            });
        }
        let report = check_bound_alg2(&log, 1.0, 1.0, 1e-9).unwrap();
        assert!(!report.ok());
        assert_eq!(report.first_violation, Some(1));
    }

    #[test]
    fn bound_check_requires_references() {
        let log = synthetic_log(3, |_| 1.0);
        assert!(check_bound_alg2(&log, 1.0, 1.0, 1e-9).is_err());
    }
}
