//! Small dense linear-algebra helpers: a deterministic symmetric eigensolver,
//! a least-squares solve, and Euclidean projection onto the probability simplex.

use nalgebra::DMatrix;

/// Eigen-decomposition of a symmetric matrix.
///
/// Eigenvalues are sorted in descending order. Each eigenvector is stored as a
/// row of `vectors` and its sign is fixed so that its largest-magnitude
/// component (lowest index on ties) is positive.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Decompose the symmetric `n x n` row-major matrix `a`.
pub fn symmetric_eigen(n: usize, a: &[f64]) -> SymmetricEigen {
    assert_eq!(a.len(), n * n, "matrix storage does not match its order");
    let m = DMatrix::from_row_slice(n, n, a);
    let eig = m.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });

    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &k in &order {
        values.push(eig.eigenvalues[k]);
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let mut pivot = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        vectors.push(v);
    }
    SymmetricEigen { values, vectors }
}

/// Minimum-norm least-squares solution of `a x = b` for the `rows x cols`
/// row-major matrix `a`, treating singular values below `rcond * sigma_max`
/// as zero.
pub fn lstsq(rows: usize, cols: usize, a: &[f64], b: &[f64], rcond: f64) -> Option<Vec<f64>> {
    assert_eq!(
        a.len(),
        rows * cols,
        "matrix storage does not match its shape"
    );
    assert_eq!(b.len(), rows, "right-hand side does not match the matrix");
    let m = DMatrix::from_row_slice(rows, cols, a);
    let svd = m.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = svd.solve(&rhs, rcond * smax).ok()?;
    let x: Vec<f64> = x.iter().copied().collect();
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Euclidean projection of `v` onto `{x : x >= 0, sum x = 1}` (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    let mut x: Vec<f64> = v.iter().map(|&vi| (vi - theta).max(0.0)).collect();
    // Re-normalise away the rounding drift so the result sums to one.
    let s: f64 = x.iter().sum();
    if s > 0.0 {
        x.iter_mut().for_each(|xi| *xi /= s);
    } else {
        x.iter_mut().for_each(|xi| *xi = 1.0 / n as f64);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_is_sorted() {
        let e = symmetric_eigen(3, &[1.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 3.0]);
        assert_eq!(e.values, vec![5.0, 3.0, 1.0]);
        assert_eq!(e.vectors[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(e.vectors[1], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn eigen_sign_convention() {
        let e = symmetric_eigen(2, &[1.0, 1.0, 1.0, 1.0]);
        assert!((e.values[0] - 2.0).abs() < 1e-14);
        assert!(e.values[1].abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[0][0] - h).abs() < 1e-14);
        assert!((e.vectors[0][1] - h).abs() < 1e-14);
        // second vector: (h, -h) up to sign; first component wins the tie
        assert!(e.vectors[1][0] > 0.0);
    }

    #[test]
    fn lstsq_regular_and_singular() {
        let x = lstsq(2, 2, &[2.0, 0.0, 0.0, 4.0], &[1.0, 1.0], 1e-12).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 0.25).abs() < 1e-15);
        // rank one: minimum-norm solution splits evenly
        let x = lstsq(2, 2, &[1.0, 1.0, 1.0, 1.0], &[2.0, 2.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        // overdetermined and consistent
        let x = lstsq(3, 1, &[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], 1e-12).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
        // underdetermined: minimum norm
        let x = lstsq(1, 2, &[3.0, 4.0], &[5.0], 1e-12).unwrap();
        assert!((x[0] - 0.6).abs() < 1e-14 && (x[1] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.3, 0.7]), vec![0.3, 0.7]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = project_simplex(&[-1.0, 0.2, 0.4]);
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 0.4).abs() < 1e-15 && (p[2] - 0.6).abs() < 1e-15);
    }
}
