//! Problem model: proximal maps, linear operators with certified norm
//! bounds, dual block descriptions and the full problem specification
//! consumed by the solvers.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vector::PrimalVector;

type ProxFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A proximal map `(point, step) -> point`. Instances are closures over
/// their parameters; the solver treats them as opaque resolvents.
#[derive(Clone)]
pub struct ProxMap {
    f: ProxFn,
}

impl ProxMap {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { f: Arc::new(f) }
    }

    /// Prox of the zero function.
    pub fn identity() -> Self {
        Self::new(|x, _| x.to_vec())
    }

    pub fn eval(&self, x: &[f64], gamma: f64) -> Vec<f64> {
        (self.f)(x, gamma)
    }
}

impl std::fmt::Debug for ProxMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ProxMap")
    }
}

/// A single-valued map `R^d -> R^d`, used for smooth gradients and for the
/// Lipschitz forward parts of dual blocks.
#[derive(Clone)]
pub struct VectorMap {
    f: MapFn,
}

impl VectorMap {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { f: Arc::new(f) }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}

impl std::fmt::Debug for VectorMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("VectorMap")
    }
}

/// A linear operator together with its adjoint and a certified upper bound
/// on its operator norm. Implementations must satisfy
/// `<apply(x), y> = <x, adjoint(y)>` and `||apply(x)|| <= norm_bound * ||x||`.
pub trait LinearOp: Send + Sync {
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn adjoint(&self, y: &[f64]) -> Vec<f64>;
    fn norm_bound(&self) -> f64;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
}

/// One dual block: the prox of a conjugate function (equivalently the
/// resolvent of the inverse monotone operator), a linear operator, a shift,
/// and an optional Lipschitz forward map with constant `nu`.
#[derive(Clone, Debug)]
pub struct DualBlockSpec {
    pub prox_g_conj: ProxMap,
    pub linop: Arc<dyn LinearOp>,
    pub shift: Vec<f64>,
    /// Absent means the forward part is identically zero (`nu` must be 0).
    pub forward: Option<VectorMap>,
    pub nu: f64,
}

impl std::fmt::Debug for dyn LinearOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "LinearOp({}x{}, |.|<={})",
            self.output_dim(),
            self.input_dim(),
            self.norm_bound()
        )
    }
}

impl DualBlockSpec {
    pub fn new(prox_g_conj: ProxMap, linop: Arc<dyn LinearOp>) -> Self {
        let dim = linop.output_dim();
        Self {
            prox_g_conj,
            linop,
            shift: vec![0.0; dim],
            forward: None,
            nu: 0.0,
        }
    }

    pub fn with_shift(mut self, shift: Vec<f64>) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_forward(mut self, forward: VectorMap, nu: f64) -> Self {
        self.forward = Some(forward);
        self.nu = nu;
        self
    }

    pub fn dim(&self) -> usize {
        self.linop.output_dim()
    }
}

/// Full problem description: primal prox, optional smooth gradient with
/// Lipschitz constant `mu`, shift `z`, dual blocks, and certified strong
/// monotonicity moduli.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    /// Primal dimension `n`.
    pub dim: usize,
    /// Resolvent of the primal set-valued part.
    pub prox_f: ProxMap,
    /// Smooth part gradient; absent means zero.
    pub grad_h: Option<VectorMap>,
    /// Lipschitz constant of `grad_h` (0 allowed, also when `grad_h` is set).
    pub mu: f64,
    pub z: PrimalVector,
    pub blocks: Vec<DualBlockSpec>,
    /// Certified strong monotonicity modulus of the primal part (0 = none).
    pub strong_convexity_primal: f64,
    /// Certified strong monotonicity moduli of the dual parts, one per block.
    pub strong_convexity_dual: Vec<f64>,
    /// Prox of the full primal function (set-valued part plus smooth part
    /// plus linear shift), when available in closed form. Required by the
    /// `Pd1`/`Pd2` variants, which take no explicit gradient steps.
    pub prox_primal_full: Option<ProxMap>,
}

impl ProblemSpec {
    pub fn new(dim: usize, prox_f: ProxMap) -> Self {
        Self {
            dim,
            prox_f,
            grad_h: None,
            mu: 0.0,
            z: PrimalVector::zeros(dim),
            blocks: Vec::new(),
            strong_convexity_primal: 0.0,
            strong_convexity_dual: Vec::new(),
            prox_primal_full: None,
        }
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim()).collect()
    }

    /// Sum of squared certified operator norms over all blocks.
    pub fn sum_norm_bound_sq(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.linop.norm_bound() * b.linop.norm_bound())
            .sum()
    }

    /// Largest Lipschitz constant among the smooth part and the forward
    /// parts of the dual blocks.
    pub fn max_lipschitz(&self) -> f64 {
        self.blocks.iter().map(|b| b.nu).fold(self.mu, f64::max)
    }

    /// Checks shapes and sign constraints; solvers call this up front.
    pub fn validate(&self) -> Result<()> {
        if self.z.len() != self.dim {
            return Err(Error::dim("shift z", self.dim, self.z.len()));
        }
        if self.mu < 0.0 || !self.mu.is_finite() {
            return Err(Error::Config(format!("mu must be finite and >= 0, got {}", self.mu)));
        }
        if self.strong_convexity_primal < 0.0 {
            return Err(Error::Config(
                "strong_convexity_primal must be >= 0".into(),
            ));
        }
        if !self.strong_convexity_dual.is_empty()
            && self.strong_convexity_dual.len() != self.blocks.len()
        {
            return Err(Error::dim(
                "strong_convexity_dual",
                self.blocks.len(),
                self.strong_convexity_dual.len(),
            ));
        }
        for (i, block) in self.blocks.iter().enumerate() {
            if block.linop.input_dim() != self.dim {
                return Err(Error::dim("block operator input", self.dim, block.linop.input_dim()));
            }
            if block.shift.len() != block.dim() {
                return Err(Error::dim("block shift r", block.dim(), block.shift.len()));
            }
            if block.nu < 0.0 || !block.nu.is_finite() {
                return Err(Error::Config(format!("nu of block {i} must be finite and >= 0")));
            }
            if block.forward.is_none() && block.nu != 0.0 {
                return Err(Error::Config(format!(
                    "block {i} has nu > 0 but no forward map"
                )));
            }
        }
        for (i, &tau) in self.strong_convexity_dual.iter().enumerate() {
            if tau < 0.0 {
                return Err(Error::Config(format!("tau of block {i} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Step-size constant `beta = max(mu, nu_1, ..., nu_m) + sqrt(sum ||L_i||^2)`
/// built from the certified norm bounds.
pub fn beta(spec: &ProblemSpec) -> f64 {
    spec.max_lipschitz() + spec.sum_norm_bound_sq().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{DenseOp, GradientOp};
    use crate::prox;

    #[test]
    fn beta_empty_spec_is_zero() {
        let spec = ProblemSpec::new(4, ProxMap::identity());
        assert_eq!(beta(&spec), 0.0);
    }

    #[test]
    fn beta_deblur_shape() {
        // one block with ||A||^2 = 1, one with ||L||^2 = 8, mu = 0 => beta = 3
        let mut spec = ProblemSpec::new(4, ProxMap::identity());
        let a = DenseOp::identity(4);
        spec.blocks.push(DualBlockSpec::new(
            ProxMap::identity(),
            Arc::new(a),
        ));
        spec.blocks.push(DualBlockSpec::new(
            ProxMap::identity(),
            Arc::new(GradientOp::new(2, 2)),
        ));
        assert!((beta(&spec) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn beta_denoising_shape() {
        // mu = 1, one block with ||L||^2 = 8 => beta = 1 + sqrt(8)
        let mut spec = ProblemSpec::new(4, ProxMap::identity());
        spec.grad_h = Some(VectorMap::new(|x| x.to_vec()));
        spec.mu = 1.0;
        spec.blocks.push(DualBlockSpec::new(
            prox::prox_map_box(-1.0, 1.0),
            Arc::new(GradientOp::new(2, 2)),
        ));
        assert!((beta(&spec) - (1.0 + 8.0_f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_bad_shift() {
        let mut spec = ProblemSpec::new(4, ProxMap::identity());
        spec.z = PrimalVector::zeros(3);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn validate_rejects_nu_without_forward() {
        let mut spec = ProblemSpec::new(4, ProxMap::identity());
        let mut block = DualBlockSpec::new(ProxMap::identity(), Arc::new(DenseOp::identity(4)));
        block.nu = 0.5;
        spec.blocks.push(block);
        assert!(spec.validate().is_err());
    }
}
