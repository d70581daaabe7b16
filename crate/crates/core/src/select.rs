//! Most violated feature mask for the linear kernel.
//!
//! With `k(x, y) = <x ⊙ d, y ⊙ d>` the SVDD objective splits over features:
//! `S(a, d) = sum_j d_j c_j` with
//! `c_j = sum_i a_i x_ij^2 - (sum_i a_i x_ij)^2`, the a-weighted variance of
//! column j. The mask minimising `S` over all masks with `B` ones is therefore
//! the `B` smallest `c_j`.

use crate::error::{Error, Result};
use crate::kernel::{DataMatrix, FeatureMask};

const SIMPLEX_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScores {
    pub c: Vec<f64>,
    pub alpha_used: Vec<f64>,
}

impl FeatureScores {
    /// `sum_j d_j c_j`, i.e. `S(a, d)` under the linear kernel.
    pub fn masked_sum(&self, mask: &FeatureMask) -> f64 {
        mask.indices().iter().map(|&j| self.c[j]).sum()
    }
}

/// Per-feature contributions `c_j` for weights `alpha` on the rows of `x`.
pub fn feature_scores(alpha: &[f64], x: &DataMatrix) -> Result<FeatureScores> {
    if alpha.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            found: alpha.len(),
        });
    }
    let sum: f64 = alpha.iter().sum();
    let min = alpha.iter().copied().fold(f64::INFINITY, f64::min);
    if !sum.is_finite() || (sum - 1.0).abs() > SIMPLEX_TOL || min < -SIMPLEX_TOL {
        return Err(Error::OffSimplex { sum, min });
    }
    let m = x.cols();
    let mut second = vec![0.0; m];
    let mut first = vec![0.0; m];
    for (a, row) in alpha.iter().zip(x.iter_rows()) {
        for j in 0..m {
            second[j] += a * row[j] * row[j];
            first[j] += a * row[j];
        }
    }
    let c = second.iter().zip(&first).map(|(s, f)| s - f * f).collect();
    Ok(FeatureScores {
        c,
        alpha_used: alpha.to_vec(),
    })
}

/// Mask selecting the `budget` smallest scores; ties go to the lower index.
pub fn most_violated_mask(scores: &FeatureScores, budget: usize) -> Result<FeatureMask> {
    let m = scores.c.len();
    if budget == 0 || budget > m {
        return Err(Error::InvalidBudget { budget, max: m });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| scores.c[a].total_cmp(&scores.c[b]).then(a.cmp(&b)));
    FeatureMask::from_indices(m, &order[..budget])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(c: &[f64]) -> FeatureScores {
        FeatureScores {
            c: c.to_vec(),
            alpha_used: vec![],
        }
    }

    #[test]
    fn single_sample_has_zero_scores() {
        let x = DataMatrix::from_rows(&[[3.0, -1.5, 2.0]]).unwrap();
        let s = feature_scores(&[1.0], &x).unwrap();
        assert_eq!(s.c, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn weighted_variance() {
        let x = DataMatrix::from_rows(&[[0.0], [2.0]]).unwrap();
        let s = feature_scores(&[0.5, 0.5], &x).unwrap();
        assert_eq!(s.c, vec![1.0]);
    }

    #[test]
    fn off_simplex_rejected() {
        let x = DataMatrix::from_rows(&[[0.0], [2.0]]).unwrap();
        assert!(matches!(
            feature_scores(&[0.5, 0.6], &x),
            Err(Error::OffSimplex { .. })
        ));
        assert!(matches!(
            feature_scores(&[1.5, -0.5], &x),
            Err(Error::OffSimplex { .. })
        ));
        assert!(feature_scores(&[1.0], &x).is_err());
    }

    #[test]
    fn picks_smallest() {
        let d = most_violated_mask(&scores(&[3.0, 1.0, 2.0]), 2).unwrap();
        assert_eq!(d.indices(), &[1, 2]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let d = most_violated_mask(&scores(&[1.0, 1.0, 5.0]), 1).unwrap();
        assert_eq!(d.indices(), &[0]);
    }

    #[test]
    fn budget_range() {
        assert!(most_violated_mask(&scores(&[1.0, 2.0]), 0).is_err());
        assert!(most_violated_mask(&scores(&[1.0, 2.0]), 3).is_err());
        assert_eq!(
            most_violated_mask(&scores(&[1.0, 2.0]), 2)
                .unwrap()
                .budget(),
            2
        );
    }
}
