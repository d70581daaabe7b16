#![allow(dead_code)]

use osklad_core::{DataMatrix, GramMatrix, SvddSolution, SUPPORT_FLOOR};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform entries in `[-scale, scale]`.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DataMatrix {
    let values = (0..rows * cols)
        .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    DataMatrix::new(rows, cols, values).unwrap()
}

/// `sum a_i G_ii - aᵀGa`, written out with plain loops.
pub fn objective(g: &GramMatrix, alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut lin = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        lin += alpha[i] * g.get(i, i);
        for j in 0..n {
            quad += alpha[i] * alpha[j] * g.get(i, j);
        }
    }
    lin - quad
}

/// Squared distance of training point `i` to the centre `sum a_j phi(x_j)`.
pub fn train_distance_sq(g: &GramMatrix, alpha: &[f64], i: usize) -> f64 {
    let n = alpha.len();
    let mut cross = 0.0;
    let mut center = 0.0;
    for j in 0..n {
        cross += alpha[j] * g.get(i, j);
        for k in 0..n {
            center += alpha[j] * alpha[k] * g.get(j, k);
        }
    }
    g.get(i, i) - 2.0 * cross + center
}

/// Largest violation of the three-case SVDD optimality conditions, in units of
/// `max(1, lambda_max)`.
pub fn kkt_violation(g: &GramMatrix, sol: &SvddSolution) -> f64 {
    let floor = SUPPORT_FLOOR * sol.c;
    let scale = g.lambda_max().max(1.0);
    let r2 = sol.radius_sq;
    let mut worst = 0.0f64;
    for (i, &a) in sol.alpha.iter().enumerate() {
        let d = train_distance_sq(g, &sol.alpha, i);
        let v = if a <= floor {
            d - r2
        } else if a < sol.c - floor {
            (d - r2).abs()
        } else {
            r2 - d
        };
        worst = worst.max(v / scale);
    }
    worst
}

/// Exhaustive search of the SVDD dual over a grid on the simplex, `N <= 3`.
pub fn grid_svdd(g: &GramMatrix, c: f64, step: f64) -> f64 {
    let n = g.size();
    let k = (1.0 / step).round() as usize;
    let mut best = f64::NEG_INFINITY;
    let mut eval = |alpha: &[f64]| {
        if alpha.iter().all(|&a| a <= c + 1e-12) {
            best = best.max(objective(g, alpha));
        }
    };
    match n {
        1 => eval(&[1.0]),
        2 => {
            for i in 0..=k {
                let a = i as f64 / k as f64;
                eval(&[a, 1.0 - a]);
            }
        }
        3 => {
            for i in 0..=k {
                for j in 0..=(k - i) {
                    let a = i as f64 / k as f64;
                    let b = j as f64 / k as f64;
                    eval(&[a, b, (1.0 - a - b).max(0.0)]);
                }
            }
        }
        _ => panic!("grid oracle supports N <= 3"),
    }
    best
}

/// Convex minimisation of `f` on `[lo, hi]` by golden-section search.
pub fn golden_min(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    let candidates = [(lo, f(lo)), (hi, f(hi)), (x1, f1), (x2, f2)];
    candidates
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap()
}

/// `rows x cols` standard normal data whose first `informative` columns are
/// scaled by `sqrt(ratio)`.
pub fn gaussian_bands(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    informative: usize,
    ratio: f64,
) -> DataMatrix {
    use rand_distr::{Distribution, StandardNormal};
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        for j in 0..cols {
            let v: f64 = StandardNormal.sample(rng);
            values.push(if j < informative { v * ratio.sqrt() } else { v });
        }
    }
    DataMatrix::new(rows, cols, values).unwrap()
}

/// Largest complementary-slackness or feasibility violation of a master
/// solution: every mask must satisfy `S_l >= t`, and masks with weight above
/// `mu_floor` must be tight. Measured in units of `scale`.
pub fn certificate_violation(sol: &osklad_core::MasterSolution, mu_floor: f64, scale: f64) -> f64 {
    let mut worst = 0.0f64;
    for (&m, &s) in sol.mu.as_slice().iter().zip(&sol.per_mask_s) {
        worst = worst.max((sol.t - s) / scale);
        if m > mu_floor {
            worst = worst.max((s - sol.t).abs() / scale);
        }
    }
    worst
}
