//! Kernel functions, data and mask types, and (masked) Gram matrices.
//!
//! Masking is an elementwise product `x ⊙ d` applied before the kernel is
//! evaluated. Masked-out coordinates contribute nothing to either kernel, so
//! the implementation simply skips them.

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Kernel family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Linear,
    GaussianRbf,
}

/// A kernel together with its bandwidth (RBF only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    kind: KernelKind,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            bandwidth: 0.0,
        }
    }

    /// Gaussian RBF `exp(-|x-y|^2 / (2 sigma^2))`.
    pub fn rbf(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidBandwidth(sigma));
        }
        Ok(KernelSpec {
            kind: KernelKind::GaussianRbf,
            bandwidth: sigma,
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Bandwidth sigma; `None` for the linear kernel.
    pub fn bandwidth(&self) -> Option<f64> {
        match self.kind {
            KernelKind::Linear => None,
            KernelKind::GaussianRbf => Some(self.bandwidth),
        }
    }

    /// Kernel value restricted to the coordinates listed in `idx`.
    fn eval_on(&self, x: &[f64], y: &[f64], idx: Option<&[usize]>) -> f64 {
        match (self.kind, idx) {
            (KernelKind::Linear, None) => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            (KernelKind::Linear, Some(idx)) => idx.iter().map(|&j| x[j] * y[j]).sum(),
            (KernelKind::GaussianRbf, idx) => {
                let d2: f64 = match idx {
                    None => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum(),
                    Some(idx) => idx.iter().map(|&j| (x[j] - y[j]) * (x[j] - y[j])).sum(),
                };
                (-d2 / (2.0 * self.bandwidth * self.bandwidth)).exp()
            }
        }
    }
}

/// Evaluate `k(x, y)`.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if !x.iter().chain(y).all(|v| v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(spec.eval_on(x, y, None))
}

/// Dense row-major sample matrix: one row per sample, one column per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(DataMatrix { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        let m = rows[0].as_ref().len();
        let mut values = Vec::with_capacity(n * m);
        for r in rows {
            let r = r.as_ref();
            if r.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        DataMatrix::new(n, m, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }

    /// New matrix holding the listed rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<DataMatrix> {
        let mut values = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            if i >= self.rows {
                return Err(Error::DimensionMismatch {
                    expected: self.rows,
                    found: i,
                });
            }
            values.extend_from_slice(self.row(i));
        }
        DataMatrix::new(idx.len(), self.cols, values)
    }
}

/// Binary feature selector `d` with exactly `budget` ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureMask {
    bits: Vec<bool>,
    indices: Vec<usize>,
}

impl FeatureMask {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        let indices: Vec<usize> = bits
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
            .collect();
        if indices.is_empty() {
            return Err(Error::InvalidBudget {
                budget: 0,
                max: bits.len(),
            });
        }
        Ok(FeatureMask { bits, indices })
    }

    /// Mask of length `len` selecting `indices` (duplicates rejected).
    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = vec![false; len];
        for &j in indices {
            if j >= len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    found: j,
                });
            }
            if bits[j] {
                return Err(Error::InvalidParameter(format!(
                    "feature {j} listed twice in mask"
                )));
            }
            bits[j] = true;
        }
        FeatureMask::new(bits)
    }

    /// All-ones mask of length `len`.
    pub fn full(len: usize) -> Result<Self> {
        FeatureMask::new(vec![true; len])
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn budget(&self) -> usize {
        self.indices.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Selected feature indices in ascending order.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, j: usize) -> bool {
        self.bits.get(j).copied().unwrap_or(false)
    }

    /// `x ⊙ d`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bits)
            .map(|(&v, &b)| if b { v } else { 0.0 })
            .collect()
    }
}

/// Symmetric kernel matrix with a cached diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
    diag: Vec<f64>,
}

impl GramMatrix {
    /// Wrap a row-major `n x n` matrix; rejects asymmetry above 1e-12.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((values[i * n + j] - values[j * n + i]).abs());
            }
        }
        if worst > 1e-12 {
            return Err(Error::NonSymmetric(worst));
        }
        Ok(Self::from_symmetric(n, values))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        GramMatrix::new(n, values)
    }

    fn from_symmetric(n: usize, values: Vec<f64>) -> Self {
        let diag = (0..n).map(|i| values[i * n + i]).collect();
        GramMatrix { n, values, diag }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `G v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(g, x)| g * x).sum())
            .collect()
    }

    /// `vᵀ G v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigen(self.n, &self.values).values
    }

    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// All eigenvalues at or above `-rel_tol * lambda_max`.
    pub fn is_psd(&self, rel_tol: f64) -> bool {
        let ev = self.eigenvalues();
        let top = ev[0].max(0.0);
        ev.iter().all(|&l| l >= -rel_tol * top)
    }

    /// Linear combination `sum_l w_l G_l` of equally sized matrices.
    pub(crate) fn weighted_sum(grams: &[GramMatrix], weights: &[f64]) -> GramMatrix {
        let n = grams[0].n;
        let mut values = vec![0.0; n * n];
        for (g, &w) in grams.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for (acc, &x) in values.iter_mut().zip(&g.values) {
                *acc += w * x;
            }
        }
        GramMatrix::from_symmetric(n, values)
    }
}

fn check_mask(mask: Option<&FeatureMask>, m: usize) -> Result<Option<&[usize]>> {
    match mask {
        None => Ok(None),
        Some(d) if d.len() != m => Err(Error::DimensionMismatch {
            expected: m,
            found: d.len(),
        }),
        Some(d) => Ok(Some(d.indices())),
    }
}

/// Gram matrix `G_ij = k(x_i ⊙ d, x_j ⊙ d)`.
///
/// The upper triangle is computed and mirrored, so the result is exactly
/// symmetric.
pub fn gram(spec: &KernelSpec, x: &DataMatrix, mask: Option<&FeatureMask>) -> Result<GramMatrix> {
    let idx = check_mask(mask, x.cols())?;
    let n = x.rows();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        let xi = x.row(i);
        for j in i..n {
            let v = spec.eval_on(xi, x.row(j), idx);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(GramMatrix::from_symmetric(n, values))
}

/// Kernel evaluations of `z` against every basis row: `(k(x_1 ⊙ d, z ⊙ d), ...)`.
pub fn cross_kernel(
    spec: &KernelSpec,
    basis: &DataMatrix,
    z: &[f64],
    mask: Option<&FeatureMask>,
) -> Result<Vec<f64>> {
    if z.len() != basis.cols() {
        return Err(Error::DimensionMismatch {
            expected: basis.cols(),
            found: z.len(),
        });
    }
    if !z.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let idx = check_mask(mask, basis.cols())?;
    Ok(basis
        .iter_rows()
        .map(|xi| spec.eval_on(xi, z, idx))
        .collect())
}
