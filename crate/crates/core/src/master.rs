//! Restricted master problem over a set of feature masks.
//!
//! For masks `d^1..d^p` with Gram matrices `K^l`, the master value is
//!
//! ```text
//! t = max_a min_{mu in simplex} sum_l mu_l S(a, d^l)
//!   = min_{mu in simplex} J(mu),   J(mu) = max_a S_{K(mu)}(a),  K(mu) = sum_l mu_l K^l
//! ```
//!
//! Two solvers are provided.
//!
//! * [`MasterMethod::InteriorPoint`] (default) solves the equivalent epigraph
//!   problem `max t s.t. S(a, d^l) >= t` over the box-constrained simplex with
//!   a log-barrier method. The weights `mu` are the normalised barrier
//!   multipliers of the `p` constraints. This certifies the saddle point even
//!   where `J` has a kink, which happens whenever the optimal `a` of the
//!   combined problem is not unique.
//! * [`MasterMethod::ProjectedGradient`] alternates SVDD solves on `K(mu)` with
//!   projected gradient steps on `J`, whose gradient is
//!   `(S(a*, d^1), ..., S(a*, d^p))`, using a backtracking line search.
//!
//! In both cases `J(mu) - min_l S(a, d^l)` bounds the distance to the optimum.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{gram, DataMatrix, FeatureMask, GramMatrix, KernelSpec};
use crate::linalg::{lstsq, project_simplex};
use crate::svdd::{finish, radius_squared, solve_svdd, svdd_objective, SolverConfig, SvddSolution};

/// KKT tolerance of the inner SVDD solves, relative to the largest diagonal
/// entry; the line search needs function values far more accurate than the
/// default solver tolerance.
const INNER_KKT_TOL: f64 = 1e-10;

/// Barrier multipliers at or below this value are treated as zero.
const MU_ACTIVE: f64 = 1e-8;

/// Interior-point weights within this fraction of C of a bound are put on it.
const SNAP: f64 = 1e-10;

/// Active masks and their Gram matrices, in insertion order.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    data: DataMatrix,
    spec: KernelSpec,
    masks: Vec<FeatureMask>,
    grams: Vec<GramMatrix>,
    seen: HashSet<FeatureMask>,
}

impl ConstraintSet {
    pub fn new(data: DataMatrix, spec: KernelSpec) -> Self {
        ConstraintSet {
            data,
            spec,
            masks: Vec::new(),
            grams: Vec::new(),
            seen: HashSet::new(),
        }
    }

    /// Append a mask; duplicates and budget changes are rejected.
    pub fn push(&mut self, mask: FeatureMask) -> Result<()> {
        if mask.len() != self.data.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.data.cols(),
                found: mask.len(),
            });
        }
        if let Some(first) = self.masks.first() {
            if first.budget() != mask.budget() {
                return Err(Error::MaskBudget {
                    expected: first.budget(),
                    found: mask.budget(),
                });
            }
        }
        if self.seen.contains(&mask) {
            return Err(Error::DuplicateMask);
        }
        let g = gram(&self.spec, &self.data, Some(&mask))?;
        self.seen.insert(mask.clone());
        self.masks.push(mask);
        self.grams.push(g);
        Ok(())
    }

    pub fn contains(&self, mask: &FeatureMask) -> bool {
        self.seen.contains(mask)
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[FeatureMask] {
        &self.masks
    }

    pub fn grams(&self) -> &[GramMatrix] {
        &self.grams
    }

    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// `S(a, d^l)` for every mask.
    pub fn per_mask_objective(&self, alpha: &[f64]) -> Vec<f64> {
        self.grams
            .iter()
            .map(|g| svdd_objective(g, alpha))
            .collect()
    }
}

/// Convex weights over the masks of a [`ConstraintSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct MklWeights {
    mu: Vec<f64>,
}

impl MklWeights {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        let sum: f64 = mu.iter().sum();
        let min = mu.iter().copied().fold(f64::INFINITY, f64::min);
        if mu.is_empty() || (sum - 1.0).abs() > 1e-9 || min < 0.0 || !sum.is_finite() {
            return Err(Error::OffSimplex { sum, min });
        }
        Ok(MklWeights { mu })
    }

    pub fn uniform(p: usize) -> Self {
        MklWeights {
            mu: vec![1.0 / p as f64; p],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

/// `sum_l mu_l K^l`.
pub fn combined_gram(cs: &ConstraintSet, w: &MklWeights) -> Result<GramMatrix> {
    if w.len() != cs.len() {
        return Err(Error::DimensionMismatch {
            expected: cs.len(),
            found: w.len(),
        });
    }
    if cs.is_empty() {
        return Err(Error::Empty);
    }
    Ok(GramMatrix::weighted_sum(&cs.grams, &w.mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MasterMethod {
    #[default]
    InteriorPoint,
    ProjectedGradient,
}

impl MasterMethod {
    pub fn name(self) -> &'static str {
        match self {
            MasterMethod::InteriorPoint => "interior-point",
            MasterMethod::ProjectedGradient => "projected-gradient",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "interior-point" => Some(MasterMethod::InteriorPoint),
            "projected-gradient" => Some(MasterMethod::ProjectedGradient),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterConfig {
    pub method: MasterMethod,
    /// Projected gradient: stop when a step moves `mu` by less than this
    /// (max norm).
    pub mu_tol: f64,
    /// Projected gradient: maximum number of accepted `mu` updates.
    /// Interior point: maximum number of barrier stages.
    pub max_outer: usize,
    /// Target for `J(mu) - min_l S_l` (projected gradient) or the barrier
    /// duality gap (interior point), relative to `max(1, scale)`.
    pub gap_tol: f64,
}

impl Default for MasterConfig {
    fn default() -> Self {
        MasterConfig {
            method: MasterMethod::InteriorPoint,
            mu_tol: 1e-12,
            max_outer: 200,
            gap_tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub alpha: Vec<f64>,
    pub mu: MklWeights,
    /// `sum_l mu_l S(a, d^l)`.
    pub t: f64,
    pub per_mask_s: Vec<f64>,
    /// SVDD solution on the combined Gram matrix (carries the radius).
    pub svdd: SvddSolution,
    pub iterations: usize,
    pub converged: bool,
}

impl MasterSolution {
    /// `t - min_l S(a, d^l)`; zero at an exact saddle point.
    pub fn gap(&self) -> f64 {
        self.t - min_of(&self.per_mask_s)
    }
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn weighted(mu: &[f64], s: &[f64]) -> f64 {
    mu.iter().zip(s).map(|(m, v)| m * v).sum()
}

/// Largest diagonal entry over all Gram matrices, at least one.
fn kernel_scale(cs: &ConstraintSet) -> f64 {
    cs.grams
        .iter()
        .flat_map(|g| g.diag().iter().copied())
        .fold(1.0f64, f64::max)
}

/// Solve the restricted master problem with the configured method.
pub fn solve_restricted_master(
    cs: &ConstraintSet,
    solver: &SolverConfig,
    config: &MasterConfig,
) -> Result<MasterSolution> {
    let p = cs.len();
    if p == 0 {
        return Err(Error::Empty);
    }
    let inner = SolverConfig {
        kkt_tol: solver.kkt_tol.min(INNER_KKT_TOL * kernel_scale(cs)),
        ..*solver
    };
    if p == 1 {
        let it = evaluate(cs, vec![1.0], &inner)?;
        return Ok(into_solution(it, 0, true));
    }
    match config.method {
        MasterMethod::InteriorPoint => interior_point(cs, &inner, config),
        MasterMethod::ProjectedGradient => projected_gradient(cs, &inner, config),
    }
}

#[derive(Clone)]
struct Iterate {
    mu: Vec<f64>,
    sol: SvddSolution,
    s: Vec<f64>,
    t: f64,
}

fn evaluate(cs: &ConstraintSet, mu: Vec<f64>, solver: &SolverConfig) -> Result<Iterate> {
    let g = GramMatrix::weighted_sum(&cs.grams, &mu);
    let sol = solve_svdd(&g, solver)?;
    let s = cs.per_mask_objective(&sol.alpha);
    let t = weighted(&mu, &s);
    Ok(Iterate { mu, sol, s, t })
}

fn into_solution(it: Iterate, iterations: usize, converged: bool) -> MasterSolution {
    MasterSolution {
        alpha: it.sol.alpha.clone(),
        mu: MklWeights { mu: it.mu },
        t: it.t,
        per_mask_s: it.s,
        svdd: it.sol,
        iterations,
        converged,
    }
}

/// Alternate SVDD solves and projected-gradient updates of the kernel
/// weights, starting from uniform weights.
fn projected_gradient(
    cs: &ConstraintSet,
    solver: &SolverConfig,
    config: &MasterConfig,
) -> Result<MasterSolution> {
    let p = cs.len();
    let mut cur = evaluate(cs, MklWeights::uniform(p).mu, solver)?;
    let spread = |s: &[f64]| {
        let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - min_of(s)
    };
    let mut step = 1.0 / spread(&cur.s).max(1e-12);
    // iterate with the highest certified lower bound min_l S_l seen so far
    let mut best = cur.clone();
    let mut iterations = 0;
    let mut converged = false;

    'outer: while iterations < config.max_outer {
        let scale = cur.t.abs().max(1.0);
        if cur.t - min_of(&cur.s) <= config.gap_tol * scale {
            converged = true;
            break;
        }
        loop {
            let trial: Vec<f64> = cur
                .mu
                .iter()
                .zip(&cur.s)
                .map(|(m, g)| m - step * g)
                .collect();
            let trial = project_simplex(&trial);
            let diff: Vec<f64> = trial.iter().zip(&cur.mu).map(|(a, b)| a - b).collect();
            let moved = diff.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
            if moved < config.mu_tol {
                converged = true;
                break 'outer;
            }
            let cand = evaluate(cs, trial, solver)?;
            let lin: f64 = cur.s.iter().zip(&diff).map(|(g, d)| g * d).sum();
            let quad: f64 = diff.iter().map(|d| d * d).sum::<f64>() / (2.0 * step);
            if cand.t <= cur.t + lin + quad + 1e-14 * scale {
                cur = cand;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if min_of(&cur.s) >= min_of(&best.s) {
            best = cur.clone();
        }
    }

    if converged {
        Ok(into_solution(cur, iterations, true))
    } else {
        Ok(into_solution(best, iterations, false))
    }
}

/// Barrier parameter growth per stage.
const BARRIER_GROWTH: f64 = 10.0;
/// Newton steps allowed per barrier stage.
const NEWTON_PER_STAGE: usize = 60;
/// Centring stops once half the squared Newton decrement is below this.
const NEWTON_TOL: f64 = 1e-14;

/// Log-barrier state for `max t s.t. S_l(a) >= t, a in box-simplex`.
struct Barrier<'a> {
    grams: &'a [GramMatrix],
    c: f64,
    /// Whether `a <= C` needs its own barrier (it is implied when `C >= 1`).
    upper: bool,
}

/// Per-mask quantities at a point: `S_l(a)` and its gradient `diag(K) - 2 K a`.
struct MaskTerms {
    s: Vec<f64>,
    grad: Vec<Vec<f64>>,
}

impl Barrier<'_> {
    fn terms(&self, alpha: &[f64]) -> MaskTerms {
        let mut s = Vec::with_capacity(self.grams.len());
        let mut grad = Vec::with_capacity(self.grams.len());
        for g in self.grams {
            let ka = g.mul_vec(alpha);
            let lin: f64 = g.diag().iter().zip(alpha).map(|(d, a)| d * a).sum();
            let quad: f64 = ka.iter().zip(alpha).map(|(x, a)| x * a).sum();
            s.push(lin - quad);
            grad.push(g.diag().iter().zip(&ka).map(|(d, x)| d - 2.0 * x).collect());
        }
        MaskTerms { s, grad }
    }

    /// Newton direction `(da, dt)` for the barrier at weight `tau`, restricted
    /// to `sum da = 0`, and the directional derivative along it.
    fn newton_direction(
        &self,
        alpha: &[f64],
        t: f64,
        tau: f64,
        terms: &MaskTerms,
    ) -> Option<(Vec<f64>, f64)> {
        let n = alpha.len();
        let mut hess = DMatrix::<f64>::zeros(n + 1, n + 1);
        let mut grad = DVector::<f64>::zeros(n + 1);
        grad[n] = -tau;
        for ((k, gs), &s) in self.grams.iter().zip(&terms.grad).zip(&terms.s) {
            let h = s - t;
            let (ih, ih2) = (1.0 / h, 1.0 / (h * h));
            for i in 0..n {
                grad[i] -= gs[i] * ih;
                let row = k.row(i);
                for j in 0..n {
                    hess[(i, j)] += gs[i] * gs[j] * ih2 + 2.0 * row[j] * ih;
                }
                hess[(i, n)] -= gs[i] * ih2;
                hess[(n, i)] -= gs[i] * ih2;
            }
            grad[n] += ih;
            hess[(n, n)] += ih2;
        }
        for (i, &a) in alpha.iter().enumerate() {
            grad[i] -= 1.0 / a;
            hess[(i, i)] += 1.0 / (a * a);
            if self.upper {
                let u = self.c - a;
                grad[i] += 1.0 / u;
                hess[(i, i)] += 1.0 / (u * u);
            }
        }

        // symmetric diagonal scaling keeps the factorisation stable when the
        // barrier terms span many orders of magnitude
        let scale: Vec<f64> = (0..=n).map(|i| 1.0 / hess[(i, i)].sqrt()).collect();
        for i in 0..=n {
            for j in 0..=n {
                hess[(i, j)] *= scale[i] * scale[j];
            }
        }
        let mut jitter = 0.0;
        let chol = loop {
            let mut m = hess.clone();
            for i in 0..=n {
                m[(i, i)] += jitter;
            }
            if let Some(ch) = m.cholesky() {
                break ch;
            }
            jitter = if jitter == 0.0 { 1e-14 } else { jitter * 10.0 };
            if jitter > 1e-4 {
                return None;
            }
        };
        let solve = |b: &DVector<f64>| {
            let scaled = DVector::from_iterator(n + 1, b.iter().zip(&scale).map(|(x, s)| x * s));
            let y = chol.solve(&scaled);
            DVector::from_iterator(n + 1, y.iter().zip(&scale).map(|(x, s)| x * s))
        };
        let x = solve(&(-&grad));
        let mut e = DVector::<f64>::zeros(n + 1);
        e.rows_mut(0, n).fill(1.0);
        let y = solve(&e);
        let ratio = x.rows(0, n).sum() / y.rows(0, n).sum();
        let dir = x - y * ratio;
        let slope = grad.dot(&dir);
        let dir: Vec<f64> = dir.iter().copied().collect();
        if dir.iter().all(|v| v.is_finite()) && slope.is_finite() {
            Some((dir, slope))
        } else {
            None
        }
    }

    /// Change of the barrier function along `s * dir`, computed from
    /// differences so that large `tau * t` terms do not swamp it; `None` if the
    /// step leaves the interior.
    fn change(
        &self,
        alpha: &[f64],
        t: f64,
        tau: f64,
        terms: &MaskTerms,
        dir: &[f64],
        step: f64,
    ) -> Option<f64> {
        let n = alpha.len();
        let da: Vec<f64> = dir[..n].iter().map(|d| step * d).collect();
        let dt = step * dir[n];
        let mut delta = -tau * dt;
        for ((k, gs), &s) in self.grams.iter().zip(&terms.grad).zip(&terms.s) {
            let h = s - t;
            let ds: f64 = gs.iter().zip(&da).map(|(g, d)| g * d).sum::<f64>() - k.quad_form(&da);
            let rel = (ds - dt) / h;
            if rel <= -1.0 {
                return None;
            }
            delta -= rel.ln_1p();
        }
        for (&a, &d) in alpha.iter().zip(&da) {
            if d / a <= -1.0 {
                return None;
            }
            delta -= (d / a).ln_1p();
            if self.upper {
                let u = self.c - a;
                if -d / u <= -1.0 {
                    return None;
                }
                delta -= (-d / u).ln_1p();
            }
        }
        Some(delta)
    }
}

fn interior_point(
    cs: &ConstraintSet,
    solver: &SolverConfig,
    config: &MasterConfig,
) -> Result<MasterSolution> {
    let n = cs.data.rows();
    let p = cs.len();
    let c = solver.c;
    if !(c.is_finite() && c > 0.0) || c * (n as f64) < 1.0 - 1e-12 {
        return Err(Error::InfeasibleBox { c, n });
    }
    let barrier = Barrier {
        grams: &cs.grams,
        c,
        upper: c < 1.0,
    };
    let mut alpha = vec![1.0 / n as f64; n];
    if c * (n as f64) <= 1.0 + 1e-12 {
        // the box pins every weight to 1/N; only mu is free
        return pinned(cs, alpha, c);
    }

    let scale = kernel_scale(cs);
    let constraints = (p + n + if barrier.upper { n } else { 0 }) as f64;
    let mut terms = barrier.terms(&alpha);
    let mut t = min_of(&terms.s) - scale;
    let mut tau = constraints / scale;
    let mut stages = 0;
    let mut converged = false;

    while stages < config.max_outer {
        for _ in 0..NEWTON_PER_STAGE {
            let Some((dir, slope)) = barrier.newton_direction(&alpha, t, tau, &terms) else {
                return Err(Error::NotConverged {
                    iterations: stages,
                    residual: constraints / tau,
                });
            };
            if -slope / 2.0 <= NEWTON_TOL {
                break;
            }
            let mut step = 1.0;
            let accepted = loop {
                match barrier.change(&alpha, t, tau, &terms, &dir, step) {
                    Some(d) if d <= 0.25 * step * slope => break true,
                    _ => {}
                }
                step *= 0.5;
                if step < 1e-20 {
                    break false;
                }
            };
            if !accepted {
                break;
            }
            for (a, d) in alpha.iter_mut().zip(&dir) {
                *a += step * d;
            }
            t += step * dir[n];
            terms = barrier.terms(&alpha);
        }
        stages += 1;
        if constraints / tau <= config.gap_tol * scale {
            converged = true;
            break;
        }
        tau *= BARRIER_GROWTH;
    }

    // on the central path mu_l = 1 / (tau (S_l - t)) sums to one; normalising
    // removes the residual centring error
    let inv: Vec<f64> = terms
        .s
        .iter()
        .map(|s| 1.0 / (s - t).max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = inv.iter().sum();
    let mu: Vec<f64> = inv.iter().map(|v| v / total).collect();

    let alpha = snap_to_box(alpha, c);
    let g = GramMatrix::weighted_sum(&cs.grams, &mu);
    let mut svdd = finish(&g, alpha, c, stages)?;
    settle_boundary(&mut svdd, &g, scale)?;
    let (mu, svdd) = match level_mu(cs, &svdd.alpha, &mu, &svdd.boundary_indices) {
        Some(leveled) => {
            let g2 = GramMatrix::weighted_sum(&cs.grams, &leveled);
            let mut refined = finish(&g2, svdd.alpha.clone(), c, stages)?;
            settle_boundary(&mut refined, &g2, scale)?;
            if boundary_spread(&refined, &g2) < boundary_spread(&svdd, &g) {
                (leveled, refined)
            } else {
                (mu, svdd)
            }
        }
        None => (mu, svdd),
    };
    let s = cs.per_mask_objective(&svdd.alpha);
    let t = weighted(&mu, &s);
    Ok(MasterSolution {
        alpha: svdd.alpha.clone(),
        mu: MklWeights { mu },
        t,
        per_mask_s: s,
        svdd,
        iterations: stages,
        converged,
    })
}

/// Recovering mu from barrier slacks `S_l - t` near 1e-11 loses digits, and
/// the error lies in the span of the mask gradients, which the centring
/// tolerance does not control. With the weights held fixed, find the
/// minimum-norm change of mu on the active masks that makes the combined
/// gradient `sum_l mu_l (G^l_ii - 2 (G^l a)_i)` level across the free weights.
/// Masks below `MU_ACTIVE` are dropped. Returns `None` when nothing is to be
/// gained or the correction would leave the simplex.
fn level_mu(cs: &ConstraintSet, alpha: &[f64], mu: &[f64], free: &[usize]) -> Option<Vec<f64>> {
    let active: Vec<usize> = (0..mu.len()).filter(|&l| mu[l] > MU_ACTIVE).collect();
    if active.len() < 2 || free.len() < 2 {
        return None;
    }
    let (rows, cols) = (free.len() + 1, active.len());
    let mut a = vec![0.0; rows * cols];
    for (k, &l) in active.iter().enumerate() {
        let g = &cs.grams[l];
        let ga = g.mul_vec(alpha);
        let grad: Vec<f64> = free.iter().map(|&i| g.get(i, i) - 2.0 * ga[i]).collect();
        let mean = grad.iter().sum::<f64>() / grad.len() as f64;
        for (r, v) in grad.iter().enumerate() {
            a[r * cols + k] = v - mean;
        }
        a[free.len() * cols + k] = 1.0;
    }
    let mut b = vec![0.0; rows];
    for r in 0..free.len() {
        b[r] = -(0..cols)
            .map(|k| a[r * cols + k] * mu[active[k]])
            .sum::<f64>();
    }
    let delta = lstsq(rows, cols, &a, &b, 1e-12)?;
    let mut out = vec![0.0; mu.len()];
    for (k, &l) in active.iter().enumerate() {
        out[l] = mu[l] + delta[k];
        if out[l] < 0.0 {
            return None;
        }
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|m| *m /= total);
    Some(out)
}

/// Largest gap between a boundary point's squared distance and `R²`.
fn boundary_spread(sol: &SvddSolution, g: &GramMatrix) -> f64 {
    let ga = g.mul_vec(&sol.alpha);
    let aga: f64 = ga.iter().zip(&sol.alpha).map(|(a, b)| a * b).sum();
    sol.boundary_indices
        .iter()
        .map(|&i| (g.get(i, i) - 2.0 * ga[i] + aga - sol.radius_sq).abs())
        .fold(0.0, f64::max)
}

/// Barrier weights that belong on a bound only approach it like `1/tau`, so a
/// fixed floor can mistake them for boundary support vectors. On the central
/// path `a_i (R² - d_i) = 1/tau`; a weight is kept on the boundary only if it
/// dominates its reduced cost, measured in units of C and `scale`. The radius
/// estimate used for that test weights each point by its distance to the box,
/// which bounds every point's contribution to the error by `1/tau`.
fn settle_boundary(sol: &mut SvddSolution, g: &GramMatrix, scale: f64) -> Result<()> {
    let c = sol.c;
    let ga = g.mul_vec(&sol.alpha);
    let aga: f64 = ga.iter().zip(&sol.alpha).map(|(a, b)| a * b).sum();
    let dist: Vec<f64> = (0..sol.alpha.len())
        .map(|i| g.get(i, i) - 2.0 * ga[i] + aga)
        .collect();
    let (mut num, mut den) = (0.0, 0.0);
    for &i in &sol.boundary_indices {
        let w = sol.alpha[i].min(c - sol.alpha[i]);
        num += w * dist[i];
        den += w;
    }
    if den <= 0.0 {
        return Ok(());
    }
    let r2 = num / den;
    sol.boundary_indices.retain(|&i| {
        let a = sol.alpha[i] / c;
        let reduced = (r2 - dist[i]) / scale;
        a > reduced && 1.0 - a > -reduced
    });
    sol.radius_sq = radius_squared(sol, g)?;
    Ok(())
}

/// Master solution when the box leaves no freedom in the weights: `mu` sits on
/// the mask with the smallest objective (lowest index on ties).
fn pinned(cs: &ConstraintSet, alpha: Vec<f64>, c: f64) -> Result<MasterSolution> {
    let s = cs.per_mask_objective(&alpha);
    let best = (0..s.len())
        .min_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)))
        .expect("at least one mask");
    let mut mu = vec![0.0; s.len()];
    mu[best] = 1.0;
    let g = GramMatrix::weighted_sum(&cs.grams, &mu);
    let svdd = finish(&g, alpha, c, 0)?;
    Ok(MasterSolution {
        alpha: svdd.alpha.clone(),
        t: s[best],
        mu: MklWeights { mu },
        per_mask_s: s,
        svdd,
        iterations: 0,
        converged: true,
    })
}

/// Interior-point weights never touch the box; move those within a hair of a
/// bound onto it and restore `sum a = 1` on the largest free weight.
fn snap_to_box(mut alpha: Vec<f64>, c: f64) -> Vec<f64> {
    let hair = SNAP * c;
    for a in alpha.iter_mut() {
        if *a <= hair {
            *a = 0.0;
        } else if *a >= c - hair {
            *a = c;
        }
    }
    let drift = alpha.iter().sum::<f64>() - 1.0;
    let free = (0..alpha.len())
        .filter(|&i| alpha[i] > 0.0 && alpha[i] < c)
        .max_by(|&a, &b| alpha[a].total_cmp(&alpha[b]));
    if let Some(i) = free {
        alpha[i] = (alpha[i] - drift).clamp(0.0, c);
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> DataMatrix {
        DataMatrix::from_rows(&[
            [0.0, 1.0, 0.5],
            [2.0, -1.0, 0.0],
            [1.0, 0.5, 3.0],
            [-1.0, 2.0, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn duplicate_and_budget_checks() {
        let mut cs = ConstraintSet::new(data(), KernelSpec::linear());
        cs.push(FeatureMask::from_indices(3, &[0, 1]).unwrap())
            .unwrap();
        assert!(matches!(
            cs.push(FeatureMask::from_indices(3, &[1, 0]).unwrap()),
            Err(Error::DuplicateMask)
        ));
        assert!(matches!(
            cs.push(FeatureMask::from_indices(3, &[2]).unwrap()),
            Err(Error::MaskBudget { .. })
        ));
        assert!(cs
            .push(FeatureMask::from_indices(4, &[0, 1]).unwrap())
            .is_err());
        assert_eq!(cs.len(), 1);
    }

    #[test]
    fn combined_gram_single() {
        let mut cs = ConstraintSet::new(data(), KernelSpec::linear());
        cs.push(FeatureMask::from_indices(3, &[0, 2]).unwrap())
            .unwrap();
        let g = combined_gram(&cs, &MklWeights::uniform(1)).unwrap();
        assert_eq!(&g, &cs.grams()[0]);
        assert!(combined_gram(&cs, &MklWeights::uniform(2)).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(MklWeights::new(vec![0.3, 0.7]).is_ok());
        assert!(MklWeights::new(vec![0.3, 0.6]).is_err());
        assert!(MklWeights::new(vec![1.2, -0.2]).is_err());
        assert!(MklWeights::new(vec![]).is_err());
    }

    #[test]
    fn single_mask_is_plain_svdd() {
        let mut cs = ConstraintSet::new(data(), KernelSpec::linear());
        cs.push(FeatureMask::from_indices(3, &[1, 2]).unwrap())
            .unwrap();
        let m = solve_restricted_master(&cs, &SolverConfig::default(), &MasterConfig::default())
            .unwrap();
        let plain = solve_svdd(&cs.grams()[0], &SolverConfig::default()).unwrap();
        assert_eq!(m.mu.as_slice(), &[1.0]);
        assert_eq!(m.alpha, plain.alpha);
        assert!((m.t - plain.objective).abs() < 1e-12);
    }

    fn two_mask_set() -> ConstraintSet {
        let mut cs = ConstraintSet::new(data(), KernelSpec::linear());
        cs.push(FeatureMask::from_indices(3, &[0, 1]).unwrap())
            .unwrap();
        cs.push(FeatureMask::from_indices(3, &[1, 2]).unwrap())
            .unwrap();
        cs
    }

    #[test]
    fn identical_grams_reduce_to_svdd() {
        // columns 0 and 2 carry the same values, so both masks see the same data
        let x = DataMatrix::from_rows(&[
            [0.0, 1.0, 0.0],
            [2.0, -1.0, 2.0],
            [1.0, 0.5, 1.0],
            [-1.0, 2.0, -1.0],
        ])
        .unwrap();
        let mut cs = ConstraintSet::new(x, KernelSpec::linear());
        cs.push(FeatureMask::from_indices(3, &[0, 1]).unwrap())
            .unwrap();
        cs.push(FeatureMask::from_indices(3, &[1, 2]).unwrap())
            .unwrap();
        let m = solve_restricted_master(&cs, &SolverConfig::default(), &MasterConfig::default())
            .unwrap();
        let plain = solve_svdd(&cs.grams()[0], &SolverConfig::default()).unwrap();
        assert!(m.converged);
        assert!(
            (m.t - plain.objective).abs() < 1e-9,
            "{} vs {}",
            m.t,
            plain.objective
        );
        assert!(m.gap().abs() < 1e-9);
    }

    #[test]
    fn interior_point_certifies_saddle() {
        let cs = two_mask_set();
        let m = solve_restricted_master(&cs, &SolverConfig::default(), &MasterConfig::default())
            .unwrap();
        assert!(m.converged);
        assert!(m.gap() >= -1e-12 && m.gap() < 1e-8, "gap {}", m.gap());
        let sum: f64 = m.mu.as_slice().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((m.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // t is J(mu): the SVDD optimum on the combined kernel
        assert!((m.t - m.svdd.objective).abs() < 1e-8);
    }

    #[test]
    fn methods_agree() {
        let cs = two_mask_set();
        let ipm = solve_restricted_master(&cs, &SolverConfig::default(), &MasterConfig::default())
            .unwrap();
        let cfg = MasterConfig {
            method: MasterMethod::ProjectedGradient,
            ..Default::default()
        };
        let pg = solve_restricted_master(&cs, &SolverConfig::default(), &cfg).unwrap();
        assert!((ipm.t - pg.t).abs() < 1e-6, "{} vs {}", ipm.t, pg.t);
    }

    #[test]
    fn pinned_box_puts_mu_on_smallest_objective() {
        let cs = two_mask_set();
        let m = solve_restricted_master(&cs, &SolverConfig::with_c(0.25), &MasterConfig::default())
            .unwrap();
        assert!(m.alpha.iter().all(|&a| a == 0.25));
        let s = &m.per_mask_s;
        let expect = if s[0] <= s[1] { [1.0, 0.0] } else { [0.0, 1.0] };
        assert_eq!(m.mu.as_slice(), &expect);
        assert_eq!(m.t, s[0].min(s[1]));
    }

    #[test]
    fn method_names_round_trip() {
        for m in [MasterMethod::InteriorPoint, MasterMethod::ProjectedGradient] {
            assert_eq!(MasterMethod::from_name(m.name()), Some(m));
        }
        assert_eq!(MasterMethod::from_name("simplex"), None);
    }
}
