//! SVDD dual solver.
//!
//! Maximises `sum_i a_i G_ii - aᵀ G a` over `{sum a = 1, 0 <= a_i <= C}` with
//! pairwise coordinate ascent. Each step moves mass from the index with the
//! smallest gradient (that can still decrease) to the partner chosen by the
//! second-order gain, so `sum a = 1` is preserved exactly.
//!
//! Squared distance of sample `i` to the centre is `g_i + aᵀGa`, where
//! `g_i = G_ii - 2 (G a)_i` is the objective gradient. KKT conditions on the
//! gradient are therefore the usual SVDD conditions on distances.
//!
//! Pair updates crawl when many support vectors are free and their Gram block
//! is badly conditioned, so every N pair updates the solver also takes a
//! Newton step on the free weights: it solves the equality-constrained
//! stationarity system for the free set and moves towards that point as far
//! as the box allows. The objective is concave along that segment, so the
//! step never loses ground.

use crate::error::{Error, Result};
use crate::kernel::{cross_kernel, gram, DataMatrix, GramMatrix, KernelSpec};
use crate::linalg::symmetric_eigen;

/// Relative floor (times C) below which a weight counts as zero.
pub const SUPPORT_FLOOR: f64 = 1e-8;

const TAU: f64 = 1e-12;

/// Free sets larger than this skip the Newton step.
const MAX_NEWTON_SET: usize = 800;

/// Eigenvalues of the stationarity system below this fraction of the largest
/// one are treated as zero.
const NULL_RCOND: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Box bound on each dual weight; must be at least `1/N`.
    pub c: f64,
    /// Stop once `max_up g - min_down g` falls to this value.
    pub kkt_tol: f64,
    /// Iteration budget, in units of N pair updates.
    pub max_passes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            c: 1.0,
            kkt_tol: 1e-6,
            max_passes: 10_000,
        }
    }
}

impl SolverConfig {
    pub fn with_c(c: f64) -> Self {
        SolverConfig {
            c,
            ..Default::default()
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) || self.c * (n as f64) < 1.0 - 1e-12 {
            return Err(Error::InfeasibleBox { c: self.c, n });
        }
        if !(self.kkt_tol.is_finite() && self.kkt_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kkt_tol must be positive, got {}",
                self.kkt_tol
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidParameter("max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvddSolution {
    pub alpha: Vec<f64>,
    /// `sum a_i G_ii - aᵀ G a`, recomputed from the final weights.
    pub objective: f64,
    pub radius_sq: f64,
    /// Indices with `a_i > floor`.
    pub support_indices: Vec<usize>,
    /// Indices with `floor < a_i < C - floor`.
    pub boundary_indices: Vec<usize>,
    /// Box bound the solution was computed with.
    pub c: f64,
    pub iterations: usize,
}

impl SvddSolution {
    /// Indices with `a_i >= C - floor`.
    pub fn bounded_indices(&self) -> Vec<usize> {
        let hi = self.c - SUPPORT_FLOOR * self.c;
        self.support_indices
            .iter()
            .copied()
            .filter(|&i| self.alpha[i] >= hi)
            .collect()
    }
}

/// `S(a) = sum_i a_i G_ii - aᵀ G a`.
pub fn svdd_objective(g: &GramMatrix, alpha: &[f64]) -> f64 {
    let lin: f64 = g.diag().iter().zip(alpha).map(|(d, a)| d * a).sum();
    lin - g.quad_form(alpha)
}

fn violation(alpha: &[f64], grad: &[f64], c: f64) -> (f64, Option<usize>) {
    // (max over "can increase" of g) - (min over "can decrease" of g)
    let mut up = f64::NEG_INFINITY;
    let mut down = f64::INFINITY;
    let mut i_down = None;
    for (k, (&a, &g)) in alpha.iter().zip(grad).enumerate() {
        if a < c && g > up {
            up = g;
        }
        if a > 0.0 && g < down {
            down = g;
            i_down = Some(k);
        }
    }
    (up - down, i_down)
}

fn full_gradient(g: &GramMatrix, alpha: &[f64]) -> Vec<f64> {
    let ga = g.mul_vec(alpha);
    g.diag().iter().zip(&ga).map(|(d, x)| d - 2.0 * x).collect()
}

/// Solve the SVDD dual for a fixed Gram matrix, starting from uniform weights.
pub fn solve_svdd(g: &GramMatrix, config: &SolverConfig) -> Result<SvddSolution> {
    let n = g.size();
    config.validate(n)?;
    let c = config.c;
    let mut alpha = vec![1.0 / n as f64; n];
    if c < 1.0 / n as f64 {
        // only reachable through the 1e-12 slack in validate
        alpha.iter_mut().for_each(|a| *a = c);
    }
    let mut grad = full_gradient(g, &alpha);
    let max_iter = config.max_passes.saturating_mul(n.max(1));
    let mut iterations = 0;

    loop {
        let (mut gap, mut i_down) = violation(&alpha, &grad, c);
        if gap <= config.kkt_tol || i_down.is_none() {
            // confirm against a freshly computed gradient before accepting
            grad = full_gradient(g, &alpha);
            (gap, i_down) = violation(&alpha, &grad, c);
            if gap <= config.kkt_tol {
                break;
            }
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual: gap,
            });
        }
        if iterations > 0 && iterations % n == 0 && newton_step(g, &mut alpha, &grad, c) {
            grad = full_gradient(g, &alpha);
            (_, i_down) = violation(&alpha, &grad, c);
        }
        let i = match i_down {
            Some(i) => i,
            None => break,
        };
        let gi = grad[i];
        let gii = g.get(i, i);
        let row_i = g.row(i);

        // second-order choice of the receiving index
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if j == i || alpha[j] >= c {
                continue;
            }
            let b = grad[j] - gi;
            if b <= 0.0 {
                continue;
            }
            let eta = (gii + g.get(j, j) - 2.0 * row_i[j]).max(TAU);
            let gain = b * b / eta;
            if best.is_none_or(|(_, bg)| gain > bg) {
                best = Some((j, gain));
            }
        }
        let j = match best {
            Some((j, _)) => j,
            None => {
                // violation is carried by i itself being the only mover; recompute
                grad = full_gradient(g, &alpha);
                iterations += 1;
                continue;
            }
        };

        let b = grad[j] - gi;
        let eta = gii + g.get(j, j) - 2.0 * row_i[j];
        let cap_i = alpha[i];
        let cap_j = c - alpha[j];
        let cap = cap_i.min(cap_j);
        let delta = if eta > TAU {
            (b / (2.0 * eta)).min(cap)
        } else {
            cap
        };
        if delta <= 0.0 {
            break;
        }
        if delta == cap_i {
            alpha[i] = 0.0;
        } else {
            alpha[i] -= delta;
        }
        if delta == cap_j {
            alpha[j] = c;
        } else {
            alpha[j] += delta;
        }
        let row_j = g.row(j);
        for (k, gk) in grad.iter_mut().enumerate() {
            *gk -= 2.0 * delta * (row_j[k] - row_i[k]);
        }
        iterations += 1;
    }

    finish(g, alpha, c, iterations)
}

/// Newton step on the free weights; returns whether `alpha` changed.
///
/// If the free block of the stationarity system is singular, its null space
/// holds directions along which the objective is linear. The step then follows
/// such a direction uphill until a weight reaches the box, which shrinks the
/// free set, and repeats.
fn newton_step(g: &GramMatrix, alpha: &mut [f64], grad: &[f64], c: f64) -> bool {
    let mut grad = grad.to_vec();
    let mut changed = false;
    loop {
        let free: Vec<usize> = (0..alpha.len())
            .filter(|&k| alpha[k] > 0.0 && alpha[k] < c)
            .collect();
        let k = free.len();
        if !(2..=MAX_NEWTON_SET).contains(&k) {
            return changed;
        }
        // [2 G_FF 1; 1ᵀ 0] [step; lambda] = [g_F; 0]
        let m = k + 1;
        let mut sys = vec![0.0; m * m];
        for (r, &p) in free.iter().enumerate() {
            let row = g.row(p);
            for (s, &q) in free.iter().enumerate() {
                sys[r * m + s] = 2.0 * row[q];
            }
            sys[r * m + k] = 1.0;
            sys[k * m + r] = 1.0;
        }
        let rhs: Vec<f64> = free.iter().map(|&p| grad[p]).chain([0.0]).collect();
        let eig = symmetric_eigen(m, &sys);
        let cutoff = NULL_RCOND * eig.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let null = eig.values.iter().position(|v| v.abs() <= cutoff);

        let (step, t_max): (Vec<f64>, f64) = match null {
            Some(z) => {
                let v = &eig.vectors[z][..k];
                let slope: f64 = v.iter().zip(&rhs).map(|(a, b)| a * b).sum();
                let sign = if slope < 0.0 { -1.0 } else { 1.0 };
                (v.iter().map(|x| sign * x).collect(), f64::INFINITY)
            }
            None => {
                let mut x = vec![0.0; m];
                for (lam, v) in eig.values.iter().zip(&eig.vectors) {
                    let coef = v.iter().zip(&rhs).map(|(a, b)| a * b).sum::<f64>() / lam;
                    x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += coef * vi);
                }
                x.truncate(k);
                (x, 1.0)
            }
        };

        let mut t = t_max;
        let mut hit = None;
        for (&p, &d) in free.iter().zip(&step) {
            let room = if d < 0.0 {
                alpha[p] / -d
            } else if d > 0.0 {
                (c - alpha[p]) / d
            } else {
                continue;
            };
            if room < t {
                t = room;
                hit = Some((p, if d < 0.0 { 0.0 } else { c }));
            }
        }
        if !t.is_finite() {
            return changed;
        }
        let mut trial = alpha.to_vec();
        for (&p, &d) in free.iter().zip(&step) {
            trial[p] = (alpha[p] + t * d).clamp(0.0, c);
        }
        if let Some((p, v)) = hit {
            trial[p] = v;
        }
        // absorb the rounding drift of sum a in the largest free weight
        let drift: f64 = trial.iter().sum::<f64>() - alpha.iter().sum::<f64>();
        if let Some(&p) = free
            .iter()
            .filter(|&&p| trial[p] > 0.0 && trial[p] < c)
            .max_by(|&&a, &&b| trial[a].total_cmp(&trial[b]))
        {
            trial[p] -= drift;
        }
        if trial.iter().any(|&a| !(0.0..=c).contains(&a))
            || svdd_objective(g, &trial) < svdd_objective(g, alpha)
        {
            return changed;
        }
        alpha.copy_from_slice(&trial);
        changed = true;
        if null.is_none() {
            return true;
        }
        grad = full_gradient(g, alpha);
    }
}

pub(crate) fn finish(
    g: &GramMatrix,
    alpha: Vec<f64>,
    c: f64,
    iterations: usize,
) -> Result<SvddSolution> {
    let floor = SUPPORT_FLOOR * c;
    let support_indices: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > floor).collect();
    let boundary_indices: Vec<usize> = support_indices
        .iter()
        .copied()
        .filter(|&i| alpha[i] < c - floor)
        .collect();
    let mut sol = SvddSolution {
        objective: svdd_objective(g, &alpha),
        alpha,
        radius_sq: 0.0,
        support_indices,
        boundary_indices,
        c,
        iterations,
    };
    sol.radius_sq = radius_squared(&sol, g)?;
    Ok(sol)
}

/// Squared radius of the enclosing sphere.
///
/// Mean squared centre distance over the boundary support vectors. When every
/// support vector sits at the upper bound, the smallest of their distances
/// is used instead, which is the largest radius still consistent with KKT.
pub fn radius_squared(sol: &SvddSolution, g: &GramMatrix) -> Result<f64> {
    if sol.alpha.len() != g.size() {
        return Err(Error::DimensionMismatch {
            expected: g.size(),
            found: sol.alpha.len(),
        });
    }
    let ga = g.mul_vec(&sol.alpha);
    let aga: f64 = ga.iter().zip(&sol.alpha).map(|(a, b)| a * b).sum();
    let dist = |s: usize| g.get(s, s) - 2.0 * ga[s] + aga;
    if !sol.boundary_indices.is_empty() {
        let sum: f64 = sol.boundary_indices.iter().map(|&s| dist(s)).sum();
        return Ok(sum / sol.boundary_indices.len() as f64);
    }
    sol.support_indices
        .iter()
        .map(|&s| dist(s))
        .min_by(f64::total_cmp)
        .ok_or(Error::Empty)
}

/// `k(z,z) - 2 sum_i a_i k(x_i, z) + aᵀ G a`.
pub fn distance_sq_to_center(
    sol: &SvddSolution,
    g: &GramMatrix,
    kz: &[f64],
    kzz: f64,
) -> Result<f64> {
    if kz.len() != sol.alpha.len() || g.size() != sol.alpha.len() {
        return Err(Error::DimensionMismatch {
            expected: sol.alpha.len(),
            found: kz.len(),
        });
    }
    let cross: f64 = kz.iter().zip(&sol.alpha).map(|(k, a)| k * a).sum();
    Ok(kzz - 2.0 * cross + g.quad_form(&sol.alpha))
}

/// Plain (unmasked) kernel SVDD trained on a sample set.
#[derive(Debug, Clone)]
pub struct KernelSvdd {
    spec: KernelSpec,
    train: DataMatrix,
    solution: SvddSolution,
    center_norm_sq: f64,
}

impl KernelSvdd {
    pub fn fit(spec: KernelSpec, train: DataMatrix, config: &SolverConfig) -> Result<Self> {
        let g = gram(&spec, &train, None)?;
        let solution = solve_svdd(&g, config)?;
        let center_norm_sq = g.quad_form(&solution.alpha);
        Ok(KernelSvdd {
            spec,
            train,
            solution,
            center_norm_sq,
        })
    }

    pub fn solution(&self) -> &SvddSolution {
        &self.solution
    }

    pub fn distance_sq(&self, z: &[f64]) -> Result<f64> {
        let kz = cross_kernel(&self.spec, &self.train, z, None)?;
        let kzz = crate::kernel::kernel_eval(&self.spec, z, z)?;
        let cross: f64 = kz
            .iter()
            .zip(&self.solution.alpha)
            .map(|(k, a)| k * a)
            .sum();
        Ok(kzz - 2.0 * cross + self.center_norm_sq)
    }

    /// Distance-to-radius ratio; values above one fall outside the sphere.
    pub fn score(&self, z: &[f64]) -> Result<f64> {
        Ok(distance_ratio(
            self.distance_sq(z)?,
            self.solution.radius_sq,
        ))
    }
}

/// `sqrt(dist_sq / radius_sq)`, with a zero radius mapping points on the
/// centre to 0 and everything else to +inf.
pub fn distance_ratio(dist_sq: f64, radius_sq: f64) -> f64 {
    let d = dist_sq.max(0.0);
    if radius_sq > 0.0 {
        (d / radius_sq).sqrt()
    } else if d <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin_gram(points: &[&[f64]]) -> GramMatrix {
        let x = DataMatrix::from_rows(points).unwrap();
        gram(&KernelSpec::linear(), &x, None).unwrap()
    }

    #[test]
    fn single_point() {
        let g = lin_gram(&[&[3.0, -1.0]]);
        let sol = solve_svdd(&g, &SolverConfig::default()).unwrap();
        assert_eq!(sol.alpha, vec![1.0]);
        assert!(sol.objective.abs() < 1e-12);
        assert!(sol.radius_sq.abs() < 1e-12);
    }

    #[test]
    fn two_points_closed_form() {
        let g = lin_gram(&[&[0.0], &[2.0]]);
        assert_eq!(g.values(), &[0.0, 0.0, 0.0, 4.0]);
        let sol = solve_svdd(&g, &SolverConfig::default()).unwrap();
        assert!((sol.alpha[0] - 0.5).abs() < 1e-9);
        assert!((sol.alpha[1] - 0.5).abs() < 1e-9);
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!((sol.radius_sq - 1.0).abs() < 1e-9);
        // the centre is at 1
        let d = distance_sq_to_center(&sol, &g, &[0.0, 2.0], 1.0).unwrap();
        assert!(d.abs() < 1e-9);
    }

    #[test]
    fn duplicated_points() {
        let g = lin_gram(&[&[0.0], &[0.0], &[2.0]]);
        let sol = solve_svdd(&g, &SolverConfig::default()).unwrap();
        assert!((sol.alpha[0] + sol.alpha[1] - 0.5).abs() < 1e-9);
        assert!((sol.alpha[2] - 0.5).abs() < 1e-9);
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!((sol.radius_sq - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_c_rejected() {
        let g = lin_gram(&[&[0.0], &[1.0], &[2.0]]);
        let r = solve_svdd(&g, &SolverConfig::with_c(0.3));
        assert!(matches!(r, Err(Error::InfeasibleBox { .. })));
    }

    #[test]
    fn c_at_lower_limit_pins_uniform() {
        let g = lin_gram(&[&[0.0], &[1.0], &[5.0], &[2.0]]);
        let sol = solve_svdd(&g, &SolverConfig::with_c(0.25)).unwrap();
        assert!(sol.alpha.iter().all(|&a| (a - 0.25).abs() < 1e-15));
        assert!(sol.boundary_indices.is_empty());
        assert_eq!(sol.bounded_indices().len(), 4);
    }

    #[test]
    fn iteration_budget_reported() {
        // 30 points on a circle: every one is a free support vector
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|k| {
                let t = k as f64 * 0.2094;
                vec![t.cos() * (1.0 + 0.01 * k as f64), t.sin()]
            })
            .collect();
        let x = DataMatrix::from_rows(&pts).unwrap();
        let g = gram(&KernelSpec::rbf(0.5).unwrap(), &x, None).unwrap();
        let cfg = SolverConfig {
            c: 1.0,
            kkt_tol: 1e-300,
            max_passes: 1,
        };
        match solve_svdd(&g, &cfg) {
            Err(Error::NotConverged {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 30);
                assert!(residual > 0.0);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_free_set_converges() {
        // 12 points on a circle in the plane: every point is on the sphere but
        // the Gram matrix has rank 2, so the optimal weights are not unique
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / 12.0 + 0.1;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let x = DataMatrix::from_rows(&pts).unwrap();
        let g = gram(&KernelSpec::linear(), &x, None).unwrap();
        let cfg = SolverConfig {
            kkt_tol: 1e-12,
            ..Default::default()
        };
        let sol = solve_svdd(&g, &cfg).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert!((sol.radius_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distance_ratio_edges() {
        assert_eq!(distance_ratio(4.0, 1.0), 2.0);
        assert_eq!(distance_ratio(-1e-15, 1.0), 0.0);
        assert_eq!(distance_ratio(0.0, 0.0), 0.0);
        assert_eq!(distance_ratio(1.0, 0.0), f64::INFINITY);
    }
}
