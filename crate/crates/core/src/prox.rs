//! Catalog of closed-form proximal maps and projections, plus the discrete
//! total variation functionals. Each entry is also available as an opaque
//! [`ProxMap`] closure over its parameters, which is how the solvers see
//! them.

use crate::error::{Error, Result};
use crate::linops::grad_apply;
use crate::problem::ProxMap;

fn clamp(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

/// Componentwise projection onto `[lo, hi]`.
#[derive(Clone, Copy, Debug)]
pub struct BoxProj {
    pub lo: f64,
    pub hi: f64,
}

impl BoxProj {
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&a| clamp(a, self.lo, self.hi)).collect()
    }
}

/// Pairwise radial projection with radius `lambda1`, acting on paired
/// components `(p_k, q_k)`.
#[derive(Clone, Copy, Debug)]
pub struct PairBallProj {
    pub radius: f64,
}

impl PairBallProj {
    pub fn project_pair(&self, p: f64, q: f64) -> (f64, f64) {
        let scale = 1.0_f64.max((p * p + q * q).sqrt() / self.radius);
        (p / scale, q / scale)
    }
}

/// Prox of `lambda2 * ||.||_1 + indicator([lo, hi]^n)` for a box inside the
/// nonnegative orthant: `clamp(x - gamma * lambda2, lo, hi)`. The closed
/// form requires `lo >= 0` whenever `lambda2 > 0` (the l1 term is linear on
/// such boxes), so that combination is rejected otherwise.
pub fn prox_l1_box(x: &[f64], gamma: f64, lambda2: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if gamma <= 0.0 {
        return Err(Error::Config(format!("prox step must be > 0, got {gamma}")));
    }
    if lambda2 < 0.0 {
        return Err(Error::Config(format!("lambda2 must be >= 0, got {lambda2}")));
    }
    if lo > hi {
        return Err(Error::Config(format!("box bounds out of order: [{lo}, {hi}]")));
    }
    if lambda2 > 0.0 && lo < 0.0 {
        return Err(Error::Config(
            "prox_l1_box requires lo >= 0 when lambda2 > 0".into(),
        ));
    }
    let shift = gamma * lambda2;
    Ok(x.iter().map(|&a| clamp(a - shift, lo, hi)).collect())
}

/// Prox of `indicator([lo, hi]^n) + <., b>`: `clamp(p - gamma * b, lo, hi)`.
pub fn proj_box_shifted(p: &[f64], gamma: f64, b: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if gamma <= 0.0 {
        return Err(Error::Config(format!("prox step must be > 0, got {gamma}")));
    }
    if p.len() != b.len() {
        return Err(Error::dim("shifted box projection", p.len(), b.len()));
    }
    Ok(p.iter()
        .zip(b)
        .map(|(&a, &bb)| clamp(a - gamma * bb, lo, hi))
        .collect())
}

/// Projection of paired components onto the ball of radius `lambda1`:
/// each `(p_k, q_k)` is scaled by `max(1, sqrt(p_k^2 + q_k^2) / lambda1)`.
pub fn proj_linf_pair_ball(p: &[f64], q: &[f64], lambda1: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if lambda1 <= 0.0 {
        return Err(Error::Config(format!("pair ball radius must be > 0, got {lambda1}")));
    }
    if p.len() != q.len() {
        return Err(Error::dim("pair ball components", p.len(), q.len()));
    }
    let proj = PairBallProj { radius: lambda1 };
    let mut po = Vec::with_capacity(p.len());
    let mut qo = Vec::with_capacity(q.len());
    for (&a, &b) in p.iter().zip(q) {
        let (a2, b2) = proj.project_pair(a, b);
        po.push(a2);
        qo.push(b2);
    }
    Ok((po, qo))
}

/// Componentwise clamp to `[lo, hi]`; with `[-lambda, lambda]` this is the
/// prox of the conjugate of `lambda * ||.||_1`.
pub fn proj_box(v: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    v.iter().map(|&a| clamp(a, lo, hi)).collect()
}

/// Anisotropic total variation: the l1 norm of the stacked forward
/// differences.
pub fn tv_aniso(x: &[f64], rows: usize, cols: usize) -> Result<f64> {
    let g = grad_apply(x, rows, cols)?;
    Ok(g.iter().map(|v| v.abs()).sum())
}

/// Isotropic total variation: the sum over pixels of the Euclidean length
/// of the (vertical, horizontal) difference pair.
pub fn tv_iso(x: &[f64], rows: usize, cols: usize) -> Result<f64> {
    let g = grad_apply(x, rows, cols)?;
    let n = rows * cols;
    Ok((0..n).map(|p| (g[p] * g[p] + g[n + p] * g[n + p]).sqrt()).sum())
}

/// [`ProxMap`] of `lambda2 * ||.||_1 + indicator([lo, hi]^n)`, `lo >= 0`.
pub fn prox_map_l1_box(lambda2: f64, lo: f64, hi: f64) -> ProxMap {
    ProxMap::new(move |x, gamma| {
        prox_l1_box(x, gamma, lambda2, lo, hi).expect("prox_l1_box parameters validated at build")
    })
}

/// [`ProxMap`] of `indicator([lo, hi]^n) + <., b>`.
pub fn prox_map_shifted_box(b: Vec<f64>, lo: f64, hi: f64) -> ProxMap {
    ProxMap::new(move |p, gamma| {
        proj_box_shifted(p, gamma, &b, lo, hi).expect("shifted box parameters validated at build")
    })
}

/// [`ProxMap`] of the indicator of the pairwise ball of radius `lambda1`,
/// acting on a block stacked as `[first components ; second components]`.
pub fn prox_map_pair_ball(lambda1: f64) -> ProxMap {
    ProxMap::new(move |y, _gamma| {
        let half = y.len() / 2;
        debug_assert_eq!(y.len(), 2 * half, "pair ball block must have even length");
        let (p, q) = y.split_at(half);
        let (mut po, qo) =
            proj_linf_pair_ball(p, q, lambda1).expect("pair ball radius validated at build");
        po.extend(qo);
        po
    })
}

/// Step-independent [`ProxMap`] clamping componentwise to `[lo, hi]`.
pub fn prox_map_box(lo: f64, hi: f64) -> ProxMap {
    ProxMap::new(move |v, _gamma| proj_box(v, lo, hi))
}
