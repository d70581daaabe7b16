mod common;

use common::{random_matrix, rng};
use osklad_core::{cross_kernel, gram, kernel_eval, DataMatrix, FeatureMask, KernelSpec};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::Rng;

fn zero_padded(x: &DataMatrix, mask: &FeatureMask) -> Vec<Vec<f64>> {
    x.iter_rows()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, &v)| if mask.contains(j) { v } else { 0.0 })
                .collect()
        })
        .collect()
}

fn rbf_by_hand(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    let mut d = 0.0;
    for k in 0..x.len() {
        d += (x[k] - y[k]) * (x[k] - y[k]);
    }
    (-d / (2.0 * sigma * sigma)).exp()
}

#[test]
fn masked_gram_matches_zero_padded_loop() {
    let mut r = rng(1);
    for _ in 0..20 {
        let x = random_matrix(&mut r, 5, 4, 2.0);
        let idx: Vec<usize> = sample(&mut r, 4, 2).into_vec();
        let mask = FeatureMask::from_indices(4, &idx).unwrap();
        let padded = zero_padded(&x, &mask);
        for spec in [KernelSpec::linear(), KernelSpec::rbf(0.7).unwrap()] {
            let g = gram(&spec, &x, Some(&mask)).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    let expect = match spec.bandwidth() {
                        None => (0..4).map(|k| padded[i][k] * padded[j][k]).sum::<f64>(),
                        Some(s) => rbf_by_hand(&padded[i], &padded[j], s),
                    };
                    assert!((g.get(i, j) - expect).abs() <= 1e-12, "{i},{j}");
                }
            }
        }
    }
}

#[test]
fn linear_gram_is_sum_of_column_outer_products() {
    let mut r = rng(2);
    for _ in 0..30 {
        let n = r.random_range(1..=6);
        let m = r.random_range(1..=6);
        let b = r.random_range(1..=m);
        let x = random_matrix(&mut r, n, m, 3.0);
        let mask = FeatureMask::from_indices(m, &sample(&mut r, m, b).into_vec()).unwrap();
        let g = gram(&KernelSpec::linear(), &x, Some(&mask)).unwrap();
        let mut expect = vec![0.0; n * n];
        for &j in mask.indices() {
            for a in 0..n {
                for c in 0..n {
                    expect[a * n + c] += x.get(a, j) * x.get(c, j);
                }
            }
        }
        for (got, want) in g.values().iter().zip(&expect) {
            assert!((got - want).abs() <= 1e-12);
        }
    }
}

#[test]
fn random_grams_are_psd() {
    let mut r = rng(3);
    for k in 0..100 {
        let n = r.random_range(2..=12);
        let m = r.random_range(1..=8);
        let x = random_matrix(&mut r, n, m, 2.0);
        let spec = if k % 2 == 0 {
            KernelSpec::linear()
        } else {
            KernelSpec::rbf(r.random_range(0.2..3.0)).unwrap()
        };
        let g = gram(&spec, &x, None).unwrap();
        let lmax = g.lambda_max();
        let lmin = g.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        assert!(lmin >= -1e-8 * lmax, "instance {k}: {lmin} vs {lmax}");
        assert!(g.is_psd(1e-8));
    }
}

#[test]
fn rbf_diagonal_is_exactly_one() {
    let mut r = rng(4);
    let x = random_matrix(&mut r, 15, 6, 50.0);
    for sigma in [1e-3, 0.5, 7.0, 1e4] {
        let g = gram(&KernelSpec::rbf(sigma).unwrap(), &x, None).unwrap();
        assert!(g.diag().iter().all(|&d| d == 1.0));
    }
}

#[test]
fn cross_kernel_matches_kernel_eval() {
    let mut r = rng(5);
    let basis = random_matrix(&mut r, 7, 5, 1.5);
    let z: Vec<f64> = (0..5).map(|_| r.random_range(-2.0..2.0)).collect();
    let mask = FeatureMask::from_indices(5, &[0, 3, 4]).unwrap();
    for spec in [KernelSpec::linear(), KernelSpec::rbf(1.3).unwrap()] {
        let k = cross_kernel(&spec, &basis, &z, Some(&mask)).unwrap();
        let zm = mask.apply(&z);
        for (i, row) in basis.iter_rows().enumerate() {
            let expect = kernel_eval(&spec, &mask.apply(row), &zm).unwrap();
            assert!((k[i] - expect).abs() <= 1e-15);
        }
        let unmasked = cross_kernel(&spec, &basis, basis.row(3), None).unwrap();
        let g = gram(&spec, &basis, None).unwrap();
        for (a, b) in unmasked.iter().zip(g.row(3)) {
            assert!((a - b).abs() <= 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masked_out_columns_do_not_matter(
        seed in any::<u64>(),
        n in 1usize..6,
        m in 2usize..6,
        sigma in 0.1f64..5.0,
    ) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, m, 2.0);
        let b = r.random_range(1..m);
        let mask = FeatureMask::from_indices(m, &sample(&mut r, m, b).into_vec()).unwrap();
        // scramble every column the mask excludes
        let mut values = x.values().to_vec();
        for i in 0..n {
            for j in 0..m {
                if !mask.contains(j) {
                    values[i * m + j] = r.random_range(-100.0..100.0);
                }
            }
        }
        let y = DataMatrix::new(n, m, values).unwrap();
        for spec in [KernelSpec::linear(), KernelSpec::rbf(sigma).unwrap()] {
            let gx = gram(&spec, &x, Some(&mask)).unwrap();
            let gy = gram(&spec, &y, Some(&mask)).unwrap();
            prop_assert_eq!(gx.values(), gy.values());
        }
    }

    #[test]
    fn gram_is_symmetric(seed in any::<u64>(), n in 1usize..8, m in 1usize..5) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, m, 3.0);
        for spec in [KernelSpec::linear(), KernelSpec::rbf(0.8).unwrap()] {
            let g = gram(&spec, &x, None).unwrap();
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(g.get(i, j), g.get(j, i));
                }
            }
        }
    }
}
