//! Assembly of the three image restoration problems (denoising, deblurring,
//! inpainting) as solver specs, their objectives, noise generation and a
//! synthetic test image.

use std::sync::Arc;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linops::{BlurOp, GradientOp, MaskOp};
use crate::problem::{DualBlockSpec, ProblemSpec, ProxMap, VectorMap};
use crate::prox;
use crate::vector::PrimalVector;

/// Which total variation to report in objectives. The solved denoising
/// model always couples the differences anisotropically; the isotropic
/// value is for evaluation only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TvFlavor {
    Aniso,
    Iso,
}

/// `lambda * TV(x) + 0.5 ||x - b||^2`.
#[derive(Clone, Debug)]
pub struct DenoiseTask {
    pub b: PrimalVector,
    pub rows: usize,
    pub cols: usize,
    pub lambda: f64,
    pub flavor: TvFlavor,
}

impl DenoiseTask {
    pub fn new(b: Vec<f64>, rows: usize, cols: usize, lambda: f64) -> Result<Self> {
        if b.len() != rows * cols {
            return Err(Error::dim("denoise image", rows * cols, b.len()));
        }
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be > 0, got {lambda}")));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("noisy image has non-finite entries".into()));
        }
        Ok(Self {
            b: PrimalVector::new(b),
            rows,
            cols,
            lambda,
            flavor: TvFlavor::Aniso,
        })
    }

    /// One quadratic data block (as a smooth gradient) and one TV block.
    /// The certified strong monotonicity modulus of the data term is 1.
    pub fn build_spec(&self) -> ProblemSpec {
        let n = self.rows * self.cols;
        let mut spec = ProblemSpec::new(n, ProxMap::identity());
        let b = self.b.data.clone();
        spec.grad_h = Some(VectorMap::new(move |x| {
            x.iter().zip(&b).map(|(xi, bi)| xi - bi).collect()
        }));
        spec.mu = 1.0;
        spec.blocks.push(DualBlockSpec::new(
            prox::prox_map_box(-self.lambda, self.lambda),
            Arc::new(GradientOp::new(self.rows, self.cols)),
        ));
        spec.strong_convexity_primal = 1.0;
        spec.strong_convexity_dual = vec![0.0];
        let b = self.b.data.clone();
        spec.prox_primal_full = Some(ProxMap::new(move |x, g| {
            x.iter()
                .zip(&b)
                .map(|(xi, bi)| (xi + g * bi) / (1.0 + g))
                .collect()
        }));
        spec
    }

    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let tv = match self.flavor {
            TvFlavor::Aniso => prox::tv_aniso(x, self.rows, self.cols)?,
            TvFlavor::Iso => prox::tv_iso(x, self.rows, self.cols)?,
        };
        let data: f64 = x
            .iter()
            .zip(&self.b.data)
            .map(|(xi, bi)| (xi - bi) * (xi - bi))
            .sum();
        Ok(self.lambda * tv + 0.5 * data)
    }
}

/// `||Ax - b||_1 + lambda1 TV_iso(x) + lambda2 ||x||_1 + indicator([0,1]^n)`.
#[derive(Clone, Debug)]
pub struct DeblurTask {
    pub b: PrimalVector,
    pub rows: usize,
    pub cols: usize,
    pub kernel: Vec<f64>,
    pub kernel_size: usize,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl DeblurTask {
    pub fn new(
        b: Vec<f64>,
        rows: usize,
        cols: usize,
        kernel: Vec<f64>,
        kernel_size: usize,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<Self> {
        if b.len() != rows * cols {
            return Err(Error::dim("blurred image", rows * cols, b.len()));
        }
        if lambda1 <= 0.0 || lambda2 <= 0.0 {
            return Err(Error::Config("lambda1 and lambda2 must be > 0".into()));
        }
        // validates size/positivity/normalization
        BlurOp::new(kernel.clone(), kernel_size, rows, cols)?;
        Ok(Self {
            b: PrimalVector::new(b),
            rows,
            cols,
            kernel,
            kernel_size,
            lambda1,
            lambda2,
        })
    }

    /// Block 1 carries the blur operator with the shifted-box conjugate
    /// prox of the l1 data term; block 2 the gradient with the pair-ball
    /// projection of the isotropic TV conjugate.
    pub fn build_spec(&self) -> Result<ProblemSpec> {
        let n = self.rows * self.cols;
        let mut spec = ProblemSpec::new(n, prox::prox_map_l1_box(self.lambda2, 0.0, 1.0));
        spec.blocks.push(DualBlockSpec::new(
            prox::prox_map_shifted_box(self.b.data.clone(), -1.0, 1.0),
            Arc::new(BlurOp::new(
                self.kernel.clone(),
                self.kernel_size,
                self.rows,
                self.cols,
            )?),
        ));
        spec.blocks.push(DualBlockSpec::new(
            prox::prox_map_pair_ball(self.lambda1),
            Arc::new(GradientOp::new(self.rows, self.cols)),
        ));
        spec.strong_convexity_dual = vec![0.0, 0.0];
        spec.prox_primal_full = Some(spec.prox_f.clone());
        Ok(spec)
    }

    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.b.len() {
            return Err(Error::dim("deblur iterate", self.b.len(), x.len()));
        }
        if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Ok(f64::INFINITY);
        }
        let ax = crate::linops::blur_apply(x, &self.kernel, self.kernel_size, self.rows, self.cols)?;
        let data: f64 = ax.iter().zip(&self.b.data).map(|(a, b)| (a - b).abs()).sum();
        let tv = prox::tv_iso(x, self.rows, self.cols)?;
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        Ok(data + self.lambda1 * tv + self.lambda2 * l1)
    }
}

/// `lambda TV_iso(x) + ||Kx - b||_1 + indicator([0,1]^n)`.
#[derive(Clone, Debug)]
pub struct InpaintTask {
    pub b: PrimalVector,
    pub mask: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub lambda: f64,
}

impl InpaintTask {
    pub fn new(b: Vec<f64>, mask: Vec<f64>, rows: usize, cols: usize, lambda: f64) -> Result<Self> {
        if b.len() != rows * cols {
            return Err(Error::dim("observed image", rows * cols, b.len()));
        }
        if mask.len() != b.len() {
            return Err(Error::dim("inpainting mask", b.len(), mask.len()));
        }
        if lambda <= 0.0 {
            return Err(Error::Config(format!("lambda must be > 0, got {lambda}")));
        }
        MaskOp::new(mask.clone())?;
        Ok(Self {
            b: PrimalVector::new(b),
            mask,
            rows,
            cols,
            lambda,
        })
    }

    pub fn build_spec(&self) -> Result<ProblemSpec> {
        let n = self.rows * self.cols;
        let mut spec = ProblemSpec::new(n, prox::prox_map_box(0.0, 1.0));
        spec.blocks.push(DualBlockSpec::new(
            prox::prox_map_pair_ball(self.lambda),
            Arc::new(GradientOp::new(self.rows, self.cols)),
        ));
        spec.blocks.push(DualBlockSpec::new(
            prox::prox_map_shifted_box(self.b.data.clone(), -1.0, 1.0),
            Arc::new(MaskOp::new(self.mask.clone())?),
        ));
        spec.strong_convexity_dual = vec![0.0, 0.0];
        spec.prox_primal_full = Some(spec.prox_f.clone());
        Ok(spec)
    }

    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.b.len() {
            return Err(Error::dim("inpaint iterate", self.b.len(), x.len()));
        }
        if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Ok(f64::INFINITY);
        }
        let tv = prox::tv_iso(x, self.rows, self.cols)?;
        let data: f64 = x
            .iter()
            .zip(self.mask.iter().zip(&self.b.data))
            .map(|(xi, (m, bi))| (m * xi - bi).abs())
            .sum();
        Ok(self.lambda * tv + data)
    }
}

/// Uniform draw in `(0, 1]` from the raw generator output.
fn uniform_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Adds white Gaussian noise of standard deviation `sigma`. The generator
/// is a seeded ChaCha8 stream and the normal deviates come from the
/// Box-Muller transform, so the output is reproducible across platforms.
/// Values are not clipped to `[0, 1]`.
pub fn add_noise(x: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    if sigma == 0.0 {
        return x.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(x.len());
    let mut pending: Option<f64> = None;
    for &xi in x {
        let z = match pending.take() {
            Some(z) => z,
            None => {
                let u1 = uniform_open(&mut rng);
                let u2 = uniform(&mut rng);
                let r = (-2.0 * u1.ln()).sqrt();
                let angle = 2.0 * std::f64::consts::PI * u2;
                pending = Some(r * angle.sin());
                r * angle.cos()
            }
        };
        out.push(xi + sigma * z);
    }
    out
}

/// Binary mask with roughly `drop_fraction` of the entries set to 0
/// (lost pixels), drawn from a seeded stream.
pub fn drop_mask(n: usize, drop_fraction: f64, seed: u64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&drop_fraction) {
        return Err(Error::Config(format!(
            "drop fraction must lie in [0, 1], got {drop_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| if uniform(&mut rng) < drop_fraction { 0.0 } else { 1.0 })
        .collect())
}

/// Deterministic grayscale test image: piecewise-constant shapes over a
/// flat background with one textured stripe region. Values lie in [0, 1].
pub fn synthetic_image(rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.25; rows * cols];
    let rf = rows as f64;
    let cf = cols as f64;
    for i in 0..rows {
        for j in 0..cols {
            let y = i as f64 / rf;
            let x = j as f64 / cf;
            let v = &mut out[i * cols + j];
            if (0.12..0.52).contains(&y) && (0.10..0.45).contains(&x) {
                *v = 0.85;
            }
            let dy = y - 0.32;
            let dx = x - 0.72;
            if (dy * dy + dx * dx).sqrt() < 0.16 {
                *v = 0.55;
            }
            if (0.62..0.78).contains(&y) && (0.08..0.92).contains(&x) {
                *v = 0.10;
            }
            if (0.84..0.97).contains(&y) && (0.15..0.85).contains(&x) {
                // fine stripes
                *v = if (i / 2 + j / 2) % 2 == 0 { 0.70 } else { 0.40 };
            }
        }
    }
    out
}
