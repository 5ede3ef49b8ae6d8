//! Primal vectors, block-structured dual vectors and their Euclidean
//! geometry. The primal space is `R^n`; the dual space is a product of `m`
//! blocks whose norm is the square root of the sum of squared block norms,
//! and the pair space carries `||(y, p)||^2 = ||y||^2 + ||p||^2`.

use crate::error::{Error, Result};

/// Inner product of two slices; errors on length mismatch.
pub fn inner(u: &[f64], w: &[f64]) -> Result<f64> {
    if u.len() != w.len() {
        return Err(Error::dim("inner product operands", u.len(), w.len()));
    }
    Ok(u.iter().zip(w).map(|(a, b)| a * b).sum())
}

/// Euclidean norm of a slice.
pub fn norm(u: &[f64]) -> f64 {
    u.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Squared Euclidean norm.
pub fn norm_sq(u: &[f64]) -> f64 {
    u.iter().map(|a| a * a).sum()
}

/// Squared distance between two slices of equal length.
pub fn dist_sq(u: &[f64], w: &[f64]) -> Result<f64> {
    if u.len() != w.len() {
        return Err(Error::dim("distance operands", u.len(), w.len()));
    }
    Ok(u.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub(crate) fn all_finite(u: &[f64]) -> bool {
    u.iter().all(|a| a.is_finite())
}

/// A vector in the primal space `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalVector {
    pub data: Vec<f64>,
}

impl PrimalVector {
    pub fn new(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn zeros(n: usize) -> Self {
        Self { data: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        inner(&self.data, &other.data)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }
}

impl From<Vec<f64>> for PrimalVector {
    fn from(data: Vec<f64>) -> Self {
        Self { data }
    }
}

/// A vector in the dual product space `G_1 x ... x G_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    pub blocks: Vec<Vec<f64>>,
}

impl DualVector {
    pub fn new(blocks: Vec<Vec<f64>>) -> Self {
        Self { blocks }
    }

    /// All-zero dual vector with the given block lengths.
    pub fn zeros(block_dims: &[usize]) -> Self {
        Self {
            blocks: block_dims.iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::dim(
                "dual block count",
                self.blocks.len(),
                other.blocks.len(),
            ));
        }
        let mut acc = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            acc += inner(a, b)?;
        }
        Ok(acc)
    }

    /// Product norm: sqrt of the sum of squared block norms.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.blocks.iter().map(|b| norm_sq(b)).sum()
    }

    pub fn dist_sq(&self, other: &Self) -> Result<f64> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::dim(
                "dual block count",
                self.blocks.len(),
                other.blocks.len(),
            ));
        }
        let mut acc = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            acc += dist_sq(a, b)?;
        }
        Ok(acc)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(|b| all_finite(b))
    }
}

/// Norm on the pair space `H x G`.
pub fn pair_norm(y: &PrimalVector, p: &DualVector) -> f64 {
    (norm_sq(&y.data) + p.norm_sq()).sqrt()
}

/// Inner product on the pair space `H x G`.
pub fn pair_inner(y: &PrimalVector, p: &DualVector, z: &PrimalVector, q: &DualVector) -> Result<f64> {
    Ok(y.inner(z)? + p.inner(q)?)
}
