//! Restricted primal-dual gap over bounded sets. The supremum side is
//! evaluated in closed form for boxes and products of pair balls; the
//! infimum side is closed form for affine primal parts and otherwise
//! solved by a projected-gradient inner loop at desk scale.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::problem::LinearOp;
use crate::vector::DualVector;

const INNER_TOL: f64 = 1e-10;
const INNER_CAP: usize = 100_000;
/// Slack for dual set membership checks; iterates produced by projections
/// sit on the boundary up to rounding.
const MEMBERSHIP_TOL: f64 = 1e-9;

/// Axis-aligned box with per-coordinate bounds. Singletons are boxes with
/// `lo == hi`.
#[derive(Clone, Debug)]
pub struct BoxSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSet {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::dim("box bounds", lo.len(), hi.len()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::Config("box bounds out of order".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn singleton(point: Vec<f64>) -> Self {
        Self {
            hi: point.clone(),
            lo: point,
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.dim()
            && v.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&x, (&l, &h))| x >= l - tol && x <= h + tol)
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&x, (&l, &h))| x.max(l).min(h))
            .collect()
    }

    /// Support function `sup_{t in box} <w, t>`.
    pub fn support(&self, w: &[f64]) -> f64 {
        w.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&c, (&l, &h))| (c * l).max(c * h))
            .sum()
    }

    /// `sup_{t in box} ||p - t||^2`, attained coordinatewise at the far end.
    pub fn farthest_sq(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&x, (&l, &h))| {
                let a = (x - l) * (x - l);
                let b = (h - x) * (h - x);
                a.max(b)
            })
            .sum()
    }

    /// Intersection with another box of the same dimension.
    fn intersect(&self, other: &BoxSet) -> Result<BoxSet> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        BoxSet::new(lo, hi)
    }
}

/// Supported dual set shapes for one block.
#[derive(Clone, Debug)]
pub enum DualSet {
    Box(BoxSet),
    /// Product of `pairs` Euclidean balls of the given radius, acting on a
    /// block stacked as `[first components ; second components]`.
    PairBall { pairs: usize, radius: f64 },
}

impl DualSet {
    pub fn dim(&self) -> usize {
        match self {
            DualSet::Box(b) => b.dim(),
            DualSet::PairBall { pairs, .. } => 2 * pairs,
        }
    }

    fn contains(&self, v: &[f64]) -> bool {
        match self {
            DualSet::Box(b) => b.contains(v, MEMBERSHIP_TOL),
            DualSet::PairBall { pairs, radius } => {
                if v.len() != 2 * pairs {
                    return false;
                }
                (0..*pairs).all(|k| {
                    (v[k] * v[k] + v[pairs + k] * v[pairs + k]).sqrt() <= radius + MEMBERSHIP_TOL
                })
            }
        }
    }

    /// `sup_{t in set} { <w, t> - (quad/2) ||t||^2 }` in closed form.
    fn concave_support(&self, w: &[f64], quad: f64) -> f64 {
        match self {
            DualSet::Box(b) => {
                if quad == 0.0 {
                    b.support(w)
                } else {
                    w.iter()
                        .zip(b.lo.iter().zip(&b.hi))
                        .map(|(&c, (&l, &h))| {
                            let t = (c / quad).max(l).min(h);
                            c * t - 0.5 * quad * t * t
                        })
                        .sum()
                }
            }
            DualSet::PairBall { pairs, radius } => (0..*pairs)
                .map(|k| {
                    let (a, b) = (w[k], w[pairs + k]);
                    let mag = (a * a + b * b).sqrt();
                    if quad == 0.0 {
                        radius * mag
                    } else if mag / quad <= *radius {
                        mag * mag / (2.0 * quad)
                    } else {
                        radius * mag - 0.5 * quad * radius * radius
                    }
                })
                .sum(),
        }
    }

    /// `sup_{t in set} ||p - t||^2`.
    fn farthest_sq(&self, p: &[f64]) -> f64 {
        match self {
            DualSet::Box(b) => b.farthest_sq(p),
            DualSet::PairBall { pairs, radius } => (0..*pairs)
                .map(|k| {
                    let mag = (p[k] * p[k] + p[pairs + k] * p[pairs + k]).sqrt();
                    (mag + radius) * (mag + radius)
                })
                .sum(),
        }
    }
}

/// One dual block of the gap: the bounded set, plus the conjugate function
/// restricted to it, `G_i*(v) = indicator(set) + <v, linear> + (quad/2) ||v||^2`.
#[derive(Clone, Debug)]
pub struct DualBlockGap {
    pub set: DualSet,
    pub linear: Vec<f64>,
    pub quad: f64,
}

impl DualBlockGap {
    pub fn indicator(set: DualSet) -> Self {
        let dim = set.dim();
        Self {
            set,
            linear: vec![0.0; dim],
            quad: 0.0,
        }
    }
}

/// Evaluable pieces of the primal function `F`.
#[derive(Clone, Debug)]
pub enum PrimalPiece {
    /// `<slope, x> + offset`.
    Affine { slope: Vec<f64>, offset: f64 },
    /// `(weight / 2) ||x - center||^2`.
    Quadratic { center: Vec<f64>, weight: f64 },
}

/// Restricted gap description: `F` as a sum of evaluable pieces plus an
/// optional domain box, the block operators with shifts, the conjugate
/// pieces per dual block, and the bounded sets.
pub struct GapSpec {
    pub pieces: Vec<PrimalPiece>,
    /// Domain of the primal function when it contains an indicator.
    pub domain: Option<BoxSet>,
    pub linops: Vec<Arc<dyn LinearOp>>,
    pub shifts: Vec<Vec<f64>>,
    pub dual_blocks: Vec<DualBlockGap>,
    pub b1: BoxSet,
}

impl GapSpec {
    /// `F(x)`, with `+inf` outside the domain box.
    pub fn primal_value(&self, x: &[f64]) -> f64 {
        if let Some(d) = &self.domain {
            if !d.contains(x, 1e-12) {
                return f64::INFINITY;
            }
        }
        self.pieces
            .iter()
            .map(|p| match p {
                PrimalPiece::Affine { slope, offset } => {
                    offset + slope.iter().zip(x).map(|(s, xi)| s * xi).sum::<f64>()
                }
                PrimalPiece::Quadratic { center, weight } => {
                    0.5 * weight
                        * center
                            .iter()
                            .zip(x)
                            .map(|(c, xi)| (xi - c) * (xi - c))
                            .sum::<f64>()
                }
            })
            .sum()
    }

    /// `G*(v)` with the indicator part, `+inf` outside the sets.
    fn conjugate_value(&self, v: &DualVector) -> f64 {
        let mut acc = 0.0;
        for (block, vb) in self.dual_blocks.iter().zip(&v.blocks) {
            if !block.set.contains(vb) {
                return f64::INFINITY;
            }
            acc += block.linear.iter().zip(vb).map(|(l, vi)| l * vi).sum::<f64>();
            acc += 0.5 * block.quad * vb.iter().map(|a| a * a).sum::<f64>();
        }
        acc
    }

    fn validate(&self, x: &[f64], v: &DualVector) -> Result<()> {
        if x.len() != self.b1.dim() {
            return Err(Error::dim("gap primal point", self.b1.dim(), x.len()));
        }
        if self.linops.len() != self.dual_blocks.len()
            || self.shifts.len() != self.dual_blocks.len()
            || v.blocks.len() != self.dual_blocks.len()
        {
            return Err(Error::dim(
                "gap dual block count",
                self.dual_blocks.len(),
                v.blocks.len(),
            ));
        }
        for ((op, block), vb) in self.linops.iter().zip(&self.dual_blocks).zip(&v.blocks) {
            if op.output_dim() != block.set.dim() || vb.len() != block.set.dim() {
                return Err(Error::dim("gap dual block", block.set.dim(), vb.len()));
            }
        }
        Ok(())
    }

    /// Minimizes `<c, x> + sum of pieces` over the effective box, in closed
    /// form when every piece is affine, otherwise by projected gradient.
    fn minimize_over_b1(&self, c: &[f64]) -> Result<f64> {
        let feasible = match &self.domain {
            Some(d) => self.b1.intersect(d)?,
            None => self.b1.clone(),
        };
        let n = feasible.dim();

        let mut slope = c.to_vec();
        let mut quad_weight = 0.0;
        for p in &self.pieces {
            match p {
                PrimalPiece::Affine { slope: s, .. } => {
                    for (a, b) in slope.iter_mut().zip(s) {
                        *a += b;
                    }
                }
                PrimalPiece::Quadratic { weight, .. } => quad_weight += weight,
            }
        }

        if quad_weight == 0.0 {
            // linear objective over a box
            let mut val: f64 = slope
                .iter()
                .zip(feasible.lo.iter().zip(&feasible.hi))
                .map(|(&s, (&l, &h))| (s * l).min(s * h))
                .sum();
            for p in &self.pieces {
                if let PrimalPiece::Affine { offset, .. } = p {
                    val += offset;
                }
            }
            return Ok(val);
        }

        // projected gradient with the exact Lipschitz step
        let step = 1.0 / quad_weight;
        let value = |x: &[f64]| -> f64 {
            c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.pieces_value(x)
        };
        let grad = |x: &[f64], g: &mut Vec<f64>| {
            g.clear();
            g.extend_from_slice(&slope);
            for p in &self.pieces {
                if let PrimalPiece::Quadratic { center, weight } = p {
                    for k in 0..n {
                        g[k] += weight * (x[k] - center[k]);
                    }
                }
            }
        };

        let mut x = feasible.project(&vec![0.0; n]);
        let mut g = Vec::with_capacity(n);
        for _ in 0..INNER_CAP {
            grad(&x, &mut g);
            let next: Vec<f64> = feasible.project(
                &x.iter()
                    .zip(&g)
                    .map(|(xk, gk)| xk - step * gk)
                    .collect::<Vec<f64>>(),
            );
            let delta = next
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            x = next;
            if delta <= INNER_TOL {
                break;
            }
        }
        Ok(value(&x))
    }

    fn pieces_value(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| match p {
                PrimalPiece::Affine { slope, offset } => {
                    offset + slope.iter().zip(x).map(|(s, xi)| s * xi).sum::<f64>()
                }
                PrimalPiece::Quadratic { center, weight } => {
                    0.5 * weight
                        * center
                            .iter()
                            .zip(x)
                            .map(|(ci, xi)| (xi - ci) * (xi - ci))
                            .sum::<f64>()
                }
            })
            .sum()
    }
}

/// Restricted gap at `(x, v)`:
/// `sup_{v' in B2} { <Lx - r, v'> + F(x) - G*(v') }`
/// `- inf_{x' in B1} { <Lx' - r, v> + F(x') - G*(v) }`.
pub fn restricted_gap(gs: &GapSpec, x: &[f64], v: &DualVector) -> Result<f64> {
    gs.validate(x, v)?;

    // sup side: closed form per block
    let fx = gs.primal_value(x);
    if fx == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let mut sup = fx;
    for ((op, shift), block) in gs.linops.iter().zip(&gs.shifts).zip(&gs.dual_blocks) {
        let mut w = op.apply(x);
        for (wk, (sk, lk)) in w.iter_mut().zip(shift.iter().zip(&block.linear)) {
            *wk -= sk + lk;
        }
        sup += block.set.concave_support(&w, block.quad);
    }

    // inf side
    let gv = gs.conjugate_value(v);
    if gv == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let mut c = vec![0.0; x.len()];
    let mut r_dot_v = 0.0;
    for ((op, shift), vb) in gs.linops.iter().zip(&gs.shifts).zip(&v.blocks) {
        let a = op.adjoint(vb);
        for (ck, ak) in c.iter_mut().zip(&a) {
            *ck += ak;
        }
        r_dot_v += shift.iter().zip(vb).map(|(s, vi)| s * vi).sum::<f64>();
    }
    let inf = gs.minimize_over_b1(&c)? - r_dot_v - gv;

    Ok(sup - inf)
}

/// The gap-bound constant
/// `C(B1, B2) = sup_{(x, v) in B1 x B2} { ||x0 - x||^2 / (2 gamma0) + sum_i ||v0_i - v_i||^2 / (2 gamma0) }`.
pub fn gap_constant(gs: &GapSpec, x0: &[f64], v0: &DualVector, gamma0: f64) -> f64 {
    let mut total = gs.b1.farthest_sq(x0);
    for (block, vb) in gs.dual_blocks.iter().zip(&v0.blocks) {
        total += block.set.farthest_sq(vb);
    }
    total / (2.0 * gamma0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::DenseOp;

    fn quadratic_gap_spec() -> GapSpec {
        // primal 0.5 x^2, one scalar block with conjugate 0.5 v^2
        GapSpec {
            pieces: vec![PrimalPiece::Quadratic {
                center: vec![0.0],
                weight: 1.0,
            }],
            domain: None,
            linops: vec![Arc::new(DenseOp::scalar(1.0))],
            shifts: vec![vec![0.0]],
            dual_blocks: vec![DualBlockGap {
                set: DualSet::Box(BoxSet::uniform(1, -2.0, 2.0).unwrap()),
                linear: vec![0.0],
                quad: 1.0,
            }],
            b1: BoxSet::uniform(1, -2.0, 2.0).unwrap(),
        }
    }

    #[test]
    fn gap_vanishes_at_saddle_of_quadratic() {
        let gs = quadratic_gap_spec();
        let g = restricted_gap(&gs, &[0.0], &DualVector::new(vec![vec![0.0]])).unwrap();
        assert!(g >= -1e-12, "gap {g} negative");
        assert!(g <= 1e-8, "gap {g} should vanish at the saddle");
    }

    #[test]
    fn gap_positive_off_saddle() {
        let gs = quadratic_gap_spec();
        let g = restricted_gap(&gs, &[0.5], &DualVector::new(vec![vec![-0.3]])).unwrap();
        assert!(g > 1e-3);
    }

    #[test]
    fn singleton_sets_give_plain_duality_gap() {
        // with B1 = {x*}, B2 = {v*} the gap is the saddle-value difference
        let gs = GapSpec {
            pieces: vec![PrimalPiece::Quadratic {
                center: vec![0.0],
                weight: 1.0,
            }],
            domain: None,
            linops: vec![Arc::new(DenseOp::scalar(1.0))],
            shifts: vec![vec![0.0]],
            dual_blocks: vec![DualBlockGap {
                set: DualSet::Box(BoxSet::singleton(vec![0.0])),
                linear: vec![0.0],
                quad: 1.0,
            }],
            b1: BoxSet::singleton(vec![0.0]),
        };
        let g = restricted_gap(&gs, &[0.4], &DualVector::new(vec![vec![0.0]])).unwrap();
        // sup side = F(0.4) + <0.4, 0> - 0 = 0.08; inf side = 0
        assert!((g - 0.08).abs() < 1e-10);
        assert!(g >= 0.0);
    }

    #[test]
    fn membership_violation_gives_infinite_gap() {
        let gs = quadratic_gap_spec();
        let g = restricted_gap(&gs, &[0.0], &DualVector::new(vec![vec![5.0]])).unwrap();
        assert!(g.is_infinite());
    }

    #[test]
    fn gap_constant_box_and_pairball() {
        let gs = GapSpec {
            pieces: vec![],
            domain: None,
            linops: vec![Arc::new(DenseOp::identity(2))],
            shifts: vec![vec![0.0, 0.0]],
            dual_blocks: vec![DualBlockGap::indicator(DualSet::PairBall {
                pairs: 1,
                radius: 2.0,
            })],
            b1: BoxSet::uniform(2, 0.0, 1.0).unwrap(),
        };
        // x0 = (0, 0): farthest corner (1, 1) -> 2; v0 = (3, 4): (5 + 2)^2 = 49
        let c = gap_constant(&gs, &[0.0, 0.0], &DualVector::new(vec![vec![3.0, 4.0]]), 0.5);
        assert!((c - (2.0 + 49.0) / 1.0).abs() < 1e-12);
    }

    #[test]
    fn inner_solver_matches_separable_closed_form() {
        // min over [0,1]^n of <c, x> + 0.5 ||x - b||^2 clamps b - c
        let b = vec![0.3, 1.4, -0.2, 0.8];
        let c = vec![0.1, -0.5, 0.2, 0.05];
        let gs = GapSpec {
            pieces: vec![PrimalPiece::Quadratic {
                center: b.clone(),
                weight: 1.0,
            }],
            domain: None,
            linops: vec![],
            shifts: vec![],
            dual_blocks: vec![],
            b1: BoxSet::uniform(4, 0.0, 1.0).unwrap(),
        };
        let got = gs.minimize_over_b1(&c).unwrap();
        let xstar: Vec<f64> = b
            .iter()
            .zip(&c)
            .map(|(bi, ci)| (bi - ci).clamp(0.0, 1.0))
            .collect();
        let want: f64 = xstar
            .iter()
            .zip(b.iter().zip(&c))
            .map(|(x, (bi, ci))| ci * x + 0.5 * (x - bi) * (x - bi))
            .sum();
        assert!((got - want).abs() < 1e-9);
    }
}
