//! Concrete linear operators for the imaging tasks: the discrete gradient
//! with Neumann boundaries, reflexive-boundary convolution, a diagonal
//! inpainting mask, a dense matrix operator for synthetic instances, and a
//! power-iteration norm estimator used to validate the certified bounds.

use std::sync::Arc;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::LinearOp;
use crate::vector::{inner, norm};

/// Forward differences of a row-major `rows x cols` image with Neumann
/// boundaries. The output stacks all vertical differences followed by all
/// horizontal differences into a single block of length `2 * rows * cols`;
/// the pair belonging to pixel `p` is `(out[p], out[n + p])`.
pub fn grad_apply(x: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    let n = rows * cols;
    if x.len() != n {
        return Err(Error::dim("gradient input", n, x.len()));
    }
    let mut out = vec![0.0; 2 * n];
    for i in 0..rows {
        for j in 0..cols {
            let p = i * cols + j;
            if i + 1 < rows {
                out[p] = x[p + cols] - x[p];
            }
            if j + 1 < cols {
                out[n + p] = x[p + 1] - x[p];
            }
        }
    }
    Ok(out)
}

/// Adjoint of [`grad_apply`] (the negative discrete divergence).
pub fn grad_adjoint(y: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    let n = rows * cols;
    if y.len() != 2 * n {
        return Err(Error::dim("gradient adjoint input", 2 * n, y.len()));
    }
    let mut out = vec![0.0; n];
    for i in 0..rows {
        for j in 0..cols {
            let p = i * cols + j;
            if i + 1 < rows {
                out[p] -= y[p];
                out[p + cols] += y[p];
            }
            if j + 1 < cols {
                out[p] -= y[n + p];
                out[p + 1] += y[n + p];
            }
        }
    }
    Ok(out)
}

/// Discrete gradient operator; `norm_bound` is the certified `sqrt(8)`.
#[derive(Clone, Debug)]
pub struct GradientOp {
    pub rows: usize,
    pub cols: usize,
}

impl GradientOp {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }
}

impl LinearOp for GradientOp {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        grad_apply(x, self.rows, self.cols).expect("gradient input shape")
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        grad_adjoint(y, self.rows, self.cols).expect("gradient adjoint shape")
    }

    fn norm_bound(&self) -> f64 {
        8.0_f64.sqrt()
    }

    fn input_dim(&self) -> usize {
        self.rows * self.cols
    }

    fn output_dim(&self) -> usize {
        2 * self.rows * self.cols
    }
}

/// Mirror an out-of-range index back into `0..len` (edge-duplicating
/// reflection, i.e. index -1 maps to 0 and index `len` maps to `len - 1`).
fn reflect(mut idx: isize, len: usize) -> usize {
    let len = len as isize;
    loop {
        if idx < 0 {
            idx = -1 - idx;
        } else if idx >= len {
            idx = 2 * len - 1 - idx;
        } else {
            return idx as usize;
        }
    }
}

/// 2-D correlation with a normalized odd-sized kernel under reflexive
/// (symmetric) boundary handling. For kernels that are even-symmetric in
/// each axis the operator is self-adjoint; the adjoint is implemented as
/// the exact transpose either way.
#[derive(Clone, Debug)]
pub struct BlurOp {
    kernel: Vec<f64>,
    size: usize,
    pub rows: usize,
    pub cols: usize,
}

impl BlurOp {
    /// `kernel` is a `size x size` row-major stencil; it must have odd side
    /// length and nonnegative entries, and is normalized to sum 1.
    pub fn new(kernel: Vec<f64>, size: usize, rows: usize, cols: usize) -> Result<Self> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "blur kernel side must be odd, got {size}"
            )));
        }
        if kernel.len() != size * size {
            return Err(Error::dim("blur kernel", size * size, kernel.len()));
        }
        if kernel.iter().any(|&k| k < 0.0 || !k.is_finite()) {
            return Err(Error::Config("blur kernel entries must be finite and >= 0".into()));
        }
        let sum: f64 = kernel.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Config("blur kernel must have positive mass".into()));
        }
        let kernel = kernel.iter().map(|k| k / sum).collect();
        Ok(Self {
            kernel,
            size,
            rows,
            cols,
        })
    }

    pub fn gaussian(size: usize, sigma: f64, rows: usize, cols: usize) -> Result<Self> {
        Self::new(gaussian_kernel(size, sigma)?, size, rows, cols)
    }
}

/// Correlation of `x` with `kernel` under reflexive padding.
pub fn blur_apply(x: &[f64], kernel: &[f64], size: usize, rows: usize, cols: usize) -> Result<Vec<f64>> {
    if size.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "blur kernel side must be odd, got {size}"
        )));
    }
    let n = rows * cols;
    if x.len() != n {
        return Err(Error::dim("blur input", n, x.len()));
    }
    if kernel.len() != size * size {
        return Err(Error::dim("blur kernel", size * size, kernel.len()));
    }
    let k = (size / 2) as isize;
    let mut out = vec![0.0; n];
    for i in 0..rows as isize {
        for j in 0..cols as isize {
            let mut acc = 0.0;
            for a in -k..=k {
                let ii = reflect(i + a, rows);
                for b in -k..=k {
                    let jj = reflect(j + b, cols);
                    let w = kernel[((a + k) * size as isize + (b + k)) as usize];
                    acc += w * x[ii * cols + jj];
                }
            }
            out[(i * cols as isize + j) as usize] = acc;
        }
    }
    Ok(out)
}

impl LinearOp for BlurOp {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        blur_apply(x, &self.kernel, self.size, self.rows, self.cols).expect("blur input shape")
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        // Exact transpose of the gather in `blur_apply`: scatter each output
        // value back through the same mirrored taps.
        let n = self.rows * self.cols;
        assert_eq!(y.len(), n, "blur adjoint shape");
        let k = (self.size / 2) as isize;
        let mut out = vec![0.0; n];
        for i in 0..self.rows as isize {
            for j in 0..self.cols as isize {
                let yi = y[(i * self.cols as isize + j) as usize];
                for a in -k..=k {
                    let ii = reflect(i + a, self.rows);
                    for b in -k..=k {
                        let jj = reflect(j + b, self.cols);
                        let w = self.kernel[((a + k) * self.size as isize + (b + k)) as usize];
                        out[ii * self.cols + jj] += w * yi;
                    }
                }
            }
        }
        out
    }

    fn norm_bound(&self) -> f64 {
        1.0
    }

    fn input_dim(&self) -> usize {
        self.rows * self.cols
    }

    fn output_dim(&self) -> usize {
        self.rows * self.cols
    }
}

/// Diagonal 0/1 mask. Idempotent and self-adjoint.
#[derive(Clone, Debug)]
pub struct MaskOp {
    pub mask: Vec<f64>,
}

impl MaskOp {
    pub fn new(mask: Vec<f64>) -> Result<Self> {
        if mask.iter().any(|&m| m != 0.0 && m != 1.0) {
            return Err(Error::Config("mask entries must be 0 or 1".into()));
        }
        Ok(Self { mask })
    }
}

impl LinearOp for MaskOp {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.mask.len(), "mask input shape");
        x.iter().zip(&self.mask).map(|(a, m)| a * m).collect()
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.apply(y)
    }

    fn norm_bound(&self) -> f64 {
        if self.mask.iter().any(|&m| m > 0.0) {
            1.0
        } else {
            0.0
        }
    }

    fn input_dim(&self) -> usize {
        self.mask.len()
    }

    fn output_dim(&self) -> usize {
        self.mask.len()
    }
}

/// Dense matrix operator, used by synthetic instances and test oracles.
/// `norm_bound` is the Frobenius norm, a valid upper bound on the spectral
/// norm.
#[derive(Clone, Debug)]
pub struct DenseOp {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    frobenius: f64,
}

impl DenseOp {
    /// Row-major `rows x cols` matrix.
    pub fn new(entries: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::dim("dense operator entries", rows * cols, entries.len()));
        }
        let frobenius = norm(&entries);
        Ok(Self {
            rows,
            cols,
            entries,
            frobenius,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            entries,
            frobenius: 1.0,
        }
    }

    /// Scalar multiple of the identity embedded as a 1x1 matrix.
    pub fn scalar(c: f64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            entries: vec![c],
            frobenius: c.abs(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }
}

impl LinearOp for DenseOp {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "dense operator input shape");
        self.entries
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "dense operator adjoint shape");
        let mut out = vec![0.0; self.cols];
        for (row, &yi) in self.entries.chunks_exact(self.cols).zip(y) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
        out
    }

    fn norm_bound(&self) -> f64 {
        self.frobenius
    }

    fn input_dim(&self) -> usize {
        self.cols
    }

    fn output_dim(&self) -> usize {
        self.rows
    }
}

/// Identity on `R^n`, occasionally handy as a block operator.
#[derive(Clone, Debug)]
pub struct IdentityOp {
    pub dim: usize,
}

impl LinearOp for IdentityOp {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }
    fn norm_bound(&self) -> f64 {
        1.0
    }
    fn input_dim(&self) -> usize {
        self.dim
    }
    fn output_dim(&self) -> usize {
        self.dim
    }
}

/// Power iteration on `L* L`. Returns the square root of the largest
/// Rayleigh quotient observed, a lower estimate of `||L||` that is
/// deterministic for a given seed. A zero operator yields 0.
pub fn estimate_norm(op: &dyn LinearOp, iters: usize, seed: u64) -> Result<f64> {
    if iters == 0 {
        return Err(Error::Config("estimate_norm needs iters >= 1".into()));
    }
    let n = op.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n)
        .map(|_| (rng.next_u64() >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0)
        .collect();
    let nx = norm(&x);
    if nx == 0.0 {
        return Ok(0.0);
    }
    x.iter_mut().for_each(|a| *a /= nx);

    let mut best = 0.0_f64;
    for _ in 0..iters {
        let y = op.adjoint(&op.apply(&x));
        // x is unit, so <x, L*Lx> = ||Lx||^2
        let rayleigh = inner(&x, &y)?;
        best = best.max(rayleigh);
        let ny = norm(&y);
        if ny == 0.0 {
            break;
        }
        x = y.iter().map(|a| a / ny).collect();
    }
    Ok(best.max(0.0).sqrt())
}

/// Rotationally symmetric Gaussian stencil of odd side length, entries
/// proportional to `exp(-(di^2 + dj^2) / (2 sigma^2))` and normalized to
/// sum 1.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<Vec<f64>> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "gaussian kernel size must be odd and positive, got {size}"
        )));
    }
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::Config(format!("gaussian sigma must be > 0, got {sigma}")));
    }
    let k = (size / 2) as isize;
    let mut kernel = Vec::with_capacity(size * size);
    for di in -k..=k {
        for dj in -k..=k {
            let d2 = (di * di + dj * dj) as f64;
            kernel.push((-d2 / (2.0 * sigma * sigma)).exp());
        }
    }
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|v| *v /= sum);
    Ok(kernel)
}

/// Convenience constructor returning the operator behind an `Arc`.
pub fn arc<T: LinearOp + 'static>(op: T) -> Arc<dyn LinearOp> {
    Arc::new(op)
}
