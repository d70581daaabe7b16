//! Empirical kernel map and its whitened form.
//!
//! A point `z` is sent to `T (k(x_1,z), ..., k(x_n,z))ᵀ` with
//! `T = Λ_r^{-1/2} U_rᵀ`, where `K = U Λ Uᵀ` is the Gram matrix of the basis
//! points and only eigenpairs with `λ > eigen_floor · λ_max` are kept. In the
//! resulting coordinates the canonical dot product reproduces the kernel on
//! the basis points, so linear methods there are kernel methods in input space.

use crate::error::{Error, Result};
use crate::kernel::{cross_kernel, gram, DataMatrix, GramMatrix, KernelSpec};
use crate::linalg::symmetric_eigen;

/// Default relative eigenvalue floor.
pub const DEFAULT_EIGEN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Whitener {
    basis: DataMatrix,
    spec: KernelSpec,
    /// `r x n`, row-major.
    transform: Vec<f64>,
    rank: usize,
    eigen_floor: f64,
}

impl Whitener {
    /// Whitener for `basis` given its precomputed Gram matrix under `spec`.
    pub fn from_gram(
        basis: DataMatrix,
        spec: KernelSpec,
        k: &GramMatrix,
        eigen_floor: f64,
    ) -> Result<Self> {
        if !(eigen_floor > 0.0 && eigen_floor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eigen floor must lie in (0, 1), got {eigen_floor}"
            )));
        }
        let n = basis.rows();
        if k.size() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: k.size(),
            });
        }
        let eig = symmetric_eigen(n, k.values());
        let top = eig.values[0];
        if top.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::DegenerateKernel);
        }
        let cutoff = eigen_floor * top;
        let mut transform = Vec::new();
        let mut rank = 0;
        for (lambda, u) in eig.values.iter().zip(&eig.vectors) {
            if *lambda <= cutoff {
                break;
            }
            let s = 1.0 / lambda.sqrt();
            transform.extend(u.iter().map(|x| x * s));
            rank += 1;
        }
        if rank == 0 {
            return Err(Error::DegenerateKernel);
        }
        Ok(Whitener {
            basis,
            spec,
            transform,
            rank,
            eigen_floor,
        })
    }

    /// Reassemble a whitener from stored parts (used when loading models).
    pub fn from_parts(
        basis: DataMatrix,
        spec: KernelSpec,
        transform: DataMatrix,
        eigen_floor: f64,
    ) -> Result<Self> {
        if transform.cols() != basis.rows() {
            return Err(Error::DimensionMismatch {
                expected: basis.rows(),
                found: transform.cols(),
            });
        }
        if transform.rows() > basis.rows() {
            return Err(Error::InvalidParameter(format!(
                "whitener rank {} exceeds basis size {}",
                transform.rows(),
                basis.rows()
            )));
        }
        Ok(Whitener {
            rank: transform.rows(),
            transform: transform.values().to_vec(),
            basis,
            spec,
            eigen_floor,
        })
    }

    pub fn basis(&self) -> &DataMatrix {
        &self.basis
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn retained_rank(&self) -> usize {
        self.rank
    }

    pub fn eigen_floor(&self) -> f64 {
        self.eigen_floor
    }

    /// Input dimensionality accepted by [`embed`].
    pub fn input_dim(&self) -> usize {
        self.basis.cols()
    }

    /// The `r x n` transform `Λ^{-1/2} Uᵀ`.
    pub fn transform(&self) -> DataMatrix {
        DataMatrix::new(self.rank, self.basis.rows(), self.transform.clone())
            .expect("whitener transform is finite and non-empty")
    }

    fn apply(&self, kz: &[f64]) -> Vec<f64> {
        self.transform
            .chunks_exact(kz.len())
            .map(|t| t.iter().zip(kz).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Whiten the empirical kernel map of `x` under `spec`.
pub fn build_whitener(x: &DataMatrix, spec: KernelSpec, eigen_floor: f64) -> Result<Whitener> {
    let k = gram(&spec, x, None)?;
    Whitener::from_gram(x.clone(), spec, &k, eigen_floor)
}

/// Whitened EKFS coordinates of `z`.
pub fn embed(w: &Whitener, z: &[f64]) -> Result<Vec<f64>> {
    let kz = cross_kernel(&w.spec, &w.basis, z, None)?;
    Ok(w.apply(&kz))
}

/// Row-wise [`embed`].
pub fn embed_matrix(w: &Whitener, z: &DataMatrix) -> Result<DataMatrix> {
    let mut values = Vec::with_capacity(z.rows() * w.rank);
    for row in z.iter_rows() {
        values.extend(embed(w, row)?);
    }
    DataMatrix::new(z.rows(), w.rank, values)
}
