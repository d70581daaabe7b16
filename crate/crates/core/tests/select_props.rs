mod common;

use common::{objective, random_matrix, rng};
use osklad_core::{feature_scores, gram, most_violated_mask, FeatureMask, KernelSpec};
use proptest::prelude::*;
use rand::Rng;

fn random_simplex(r: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n)
        .map(|_| -r.random::<f64>().max(1e-300).ln())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn all_masks(m: usize, b: usize) -> Vec<FeatureMask> {
    (0u32..1 << m)
        .filter(|bits| bits.count_ones() as usize == b)
        .map(|bits| FeatureMask::new((0..m).map(|j| bits >> j & 1 == 1).collect()).unwrap())
        .collect()
}

fn masked_objective(x: &osklad_core::DataMatrix, alpha: &[f64], mask: &FeatureMask) -> f64 {
    objective(&gram(&KernelSpec::linear(), x, Some(mask)).unwrap(), alpha)
}

#[test]
fn sorted_scores_give_the_brute_force_minimum() {
    let mut r = rng(31);
    for k in 0..100 {
        let n = r.random_range(1..=8);
        let m = r.random_range(1..=10);
        let b = r.random_range(1..=m.min(5));
        let x = random_matrix(&mut r, n, m, 3.0);
        let alpha = random_simplex(&mut r, n);
        let scores = feature_scores(&alpha, &x).unwrap();
        let chosen = most_violated_mask(&scores, b).unwrap();
        assert_eq!(chosen.budget(), b);
        let got = masked_objective(&x, &alpha, &chosen);
        let best = all_masks(m, b)
            .iter()
            .map(|d| masked_objective(&x, &alpha, d))
            .fold(f64::INFINITY, f64::min);
        assert!((got - best).abs() <= 1e-10, "case {k}: {got} vs {best}");
    }
}

#[test]
fn score_sum_equals_masked_objective_for_every_mask() {
    let mut r = rng(32);
    for k in 0..100 {
        let n = r.random_range(1..=8);
        let m = r.random_range(1..=8);
        let x = random_matrix(&mut r, n, m, 3.0);
        let alpha = random_simplex(&mut r, n);
        let scores = feature_scores(&alpha, &x).unwrap();
        for b in 1..=m {
            for d in all_masks(m, b) {
                let s = masked_objective(&x, &alpha, &d);
                assert!((scores.masked_sum(&d) - s).abs() <= 1e-10, "case {k}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scores_are_weighted_variances(seed in any::<u64>(), n in 1usize..12, m in 1usize..8) {
        let mut r = common::rng(seed);
        let x = random_matrix(&mut r, n, m, 5.0);
        let alpha = random_simplex(&mut r, n);
        let scores = feature_scores(&alpha, &x).unwrap();
        for j in 0..m {
            prop_assert!(scores.c[j] >= -1e-10);
            let mean: f64 = (0..n).map(|i| alpha[i] * x.get(i, j)).sum();
            let var: f64 = (0..n).map(|i| alpha[i] * (x.get(i, j) - mean).powi(2)).sum();
            prop_assert!((scores.c[j] - var).abs() <= 1e-10);
        }
    }

    #[test]
    fn chosen_mask_has_the_smallest_scores(seed in any::<u64>(), m in 1usize..10) {
        let mut r = common::rng(seed);
        let x = random_matrix(&mut r, 6, m, 2.0);
        let alpha = random_simplex(&mut r, 6);
        let scores = feature_scores(&alpha, &x).unwrap();
        let b = r.random_range(1..=m);
        let mask = most_violated_mask(&scores, b).unwrap();
        let worst_in = mask.indices().iter().map(|&j| scores.c[j]).fold(f64::NEG_INFINITY, f64::max);
        for j in (0..m).filter(|&j| !mask.contains(j)) {
            prop_assert!(scores.c[j] >= worst_in);
        }
    }
}
