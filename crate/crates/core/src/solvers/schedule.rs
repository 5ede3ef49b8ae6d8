//! The decreasing primal step-size sequence used by the accelerated
//! variant: `gamma_{n+1} = gamma_n / sqrt(1 + 2 rho gamma_n (1 - gamma_n))`.
//! The sequence is strictly decreasing, stays positive and satisfies
//! `n * rho * gamma_n -> 1`.

use crate::error::{Error, Result};

/// Full sequence `gamma_0, ..., gamma_{n_max}` (length `n_max + 1`).
pub fn gamma_schedule_alg2(gamma0: f64, rho: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(gamma0 > 0.0 && gamma0 < 1.0) {
        return Err(Error::Config(format!(
            "gamma0 must lie in (0, 1), got {gamma0}"
        )));
    }
    if rho <= 0.0 || !rho.is_finite() {
        return Err(Error::Config(format!("rho must be > 0, got {rho}")));
    }
    let mut out = Vec::with_capacity(n_max + 1);
    let mut g = gamma0;
    out.push(g);
    for _ in 0..n_max {
        g /= (1.0 + 2.0 * rho * g * (1.0 - g)).sqrt();
        out.push(g);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strictly_decreasing_and_positive() {
        let seq = gamma_schedule_alg2(0.9, 0.3, 1000).unwrap();
        for w in seq.windows(2) {
            assert!(w[1] < w[0]);
            assert!(w[1] > 0.0);
        }
    }

    #[test]
    fn first_step_plug_in() {
        // gamma1 = 0.9 / sqrt(1 + 0.6 * 0.9 * 0.1)
        let seq = gamma_schedule_alg2(0.9, 0.3, 1).unwrap();
        let expected = 0.9 / (1.0f64 + 0.6 * 0.9 * 0.1).sqrt();
        assert!((seq[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn asymptotic_n_rho_gamma_to_one() {
        let n = 100_000;
        let seq = gamma_schedule_alg2(0.5, 1.0, n).unwrap();
        let v = n as f64 * 1.0 * seq[n];
        assert!((v - 1.0).abs() < 0.05, "n rho gamma_n = {v}");
    }

    #[test]
    fn rejects_bad_gamma0() {
        assert!(gamma_schedule_alg2(0.0, 1.0, 10).is_err());
        assert!(gamma_schedule_alg2(1.0, 1.0, 10).is_err());
        assert!(gamma_schedule_alg2(0.5, 0.0, 10).is_err());
    }
}
