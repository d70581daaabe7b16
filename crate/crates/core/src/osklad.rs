//! Cutting-plane feature selection for SVDD.
//!
//! The loop keeps a set of active masks. Each round solves the restricted
//! master problem over those masks, then asks which mask of the given budget
//! most violates `t <= S(a, d)` for the new weights `a`; for the linear kernel
//! that is the `B` columns of smallest a-weighted variance. The round ends
//! the loop if that mask is already active, if the master value stalls, or
//! when the iteration budget runs out.
//!
//! The nonlinear variant first maps the training data into the whitened
//! empirical kernel feature space and runs the same loop there with the
//! linear kernel; masks then select EKFS coordinates.

use crate::ekfs::{build_whitener, embed, Whitener};
use crate::error::{Error, Result};
use crate::kernel::{DataMatrix, FeatureMask, KernelSpec};
use crate::master::{
    solve_restricted_master, ConstraintSet, MasterConfig, MasterSolution, MklWeights,
};
use crate::select::{feature_scores, most_violated_mask};
use crate::svdd::{distance_ratio, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    LinearInputSpace,
    EkfsNonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Number of features each mask selects.
    pub budget: usize,
    pub solver: SolverConfig,
    pub master: MasterConfig,
    /// Relative change of the master value treated as a stall.
    pub outer_tol: f64,
    /// Maximum number of master solves.
    pub max_outer: usize,
}

impl FitConfig {
    pub fn new(budget: usize) -> Self {
        FitConfig {
            budget,
            solver: SolverConfig::default(),
            master: MasterConfig::default(),
            outer_tol: 1e-5,
            max_outer: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The most violated mask was already active.
    DuplicateMask,
    ObjectiveStall,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub iterations: usize,
    /// Master value after each round.
    pub t_trace: Vec<f64>,
    pub stop_reason: StopReason,
    /// Final master solution (weights, per-mask objectives, gap).
    pub master: MasterSolution,
}

/// A fitted detector: everything needed to score new points.
#[derive(Debug, Clone)]
pub struct OskladModel {
    variant: Variant,
    whitener: Option<Whitener>,
    constraints: ConstraintSet,
    mu: MklWeights,
    alpha: Vec<f64>,
    radius_sq: f64,
    config: FitConfig,
    // derived: centre in coordinate space and per-coordinate weight sum_l mu_l d^l_j
    center: Vec<f64>,
    coord_weights: Vec<f64>,
}

impl OskladModel {
    /// Assemble a model from its stored parts, rebuilding the mask Gram matrices.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        variant: Variant,
        whitener: Option<Whitener>,
        coords: DataMatrix,
        masks: Vec<FeatureMask>,
        mu: MklWeights,
        alpha: Vec<f64>,
        radius_sq: f64,
        config: FitConfig,
    ) -> Result<Self> {
        match (variant, &whitener) {
            (Variant::EkfsNonlinear, None) => {
                return Err(Error::InvalidParameter(
                    "EKFS model requires a whitener".into(),
                ))
            }
            (Variant::LinearInputSpace, Some(_)) => {
                return Err(Error::InvalidParameter(
                    "linear model cannot carry a whitener".into(),
                ))
            }
            _ => {}
        }
        if let Some(w) = &whitener {
            if w.retained_rank() != coords.cols() {
                return Err(Error::DimensionMismatch {
                    expected: w.retained_rank(),
                    found: coords.cols(),
                });
            }
        }
        if masks.is_empty() {
            return Err(Error::Empty);
        }
        if mu.len() != masks.len() {
            return Err(Error::DimensionMismatch {
                expected: masks.len(),
                found: mu.len(),
            });
        }
        if alpha.len() != coords.rows() {
            return Err(Error::DimensionMismatch {
                expected: coords.rows(),
                found: alpha.len(),
            });
        }
        if !(radius_sq.is_finite() && radius_sq >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid radius_sq {radius_sq}"
            )));
        }
        let mut cs = ConstraintSet::new(coords, KernelSpec::linear());
        for m in masks {
            cs.push(m)?;
        }
        Ok(Self::assemble(
            variant, whitener, cs, mu, alpha, radius_sq, config,
        ))
    }

    fn assemble(
        variant: Variant,
        whitener: Option<Whitener>,
        constraints: ConstraintSet,
        mu: MklWeights,
        alpha: Vec<f64>,
        radius_sq: f64,
        config: FitConfig,
    ) -> Self {
        let coords = constraints.data();
        let dim = coords.cols();
        let mut center = vec![0.0; dim];
        for (a, row) in alpha.iter().zip(coords.iter_rows()) {
            for (c, x) in center.iter_mut().zip(row) {
                *c += a * x;
            }
        }
        let mut coord_weights = vec![0.0; dim];
        for (m, w) in constraints.masks().iter().zip(mu.as_slice()) {
            for &j in m.indices() {
                coord_weights[j] += w;
            }
        }
        OskladModel {
            variant,
            whitener,
            constraints,
            mu,
            alpha,
            radius_sq: radius_sq.max(0.0),
            config,
            center,
            coord_weights,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn whitener(&self) -> Option<&Whitener> {
        self.whitener.as_ref()
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn masks(&self) -> &[FeatureMask] {
        self.constraints.masks()
    }

    /// Training points in the space the masks act on.
    pub fn training_coords(&self) -> &DataMatrix {
        self.constraints.data()
    }

    pub fn mu(&self) -> &MklWeights {
        &self.mu
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn radius_sq(&self) -> f64 {
        self.radius_sq
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    /// Number of input features a scored point must have.
    pub fn input_dim(&self) -> usize {
        match &self.whitener {
            Some(w) => w.input_dim(),
            None => self.constraints.data().cols(),
        }
    }

    /// Map an input point to mask coordinates.
    pub fn coordinates(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: z.len(),
            });
        }
        match &self.whitener {
            Some(w) => embed(w, z),
            None => {
                if !z.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite);
                }
                Ok(z.to_vec())
            }
        }
    }

    /// `sum_l mu_l |(z - centre) ⊙ d^l|^2` for a point already in mask coordinates.
    fn combined_distance_sq(&self, coords: &[f64]) -> f64 {
        coords
            .iter()
            .zip(&self.center)
            .zip(&self.coord_weights)
            .map(|((z, c), w)| w * (z - c) * (z - c))
            .sum()
    }

    /// Squared distance of an input point to the centre of the combined sphere.
    pub fn distance_sq(&self, z: &[f64]) -> Result<f64> {
        Ok(self.combined_distance_sq(&self.coordinates(z)?))
    }

    /// Distance-to-radius ratio of one input point.
    pub fn score(&self, z: &[f64]) -> Result<f64> {
        Ok(distance_ratio(self.distance_sq(z)?, self.radius_sq))
    }
}

fn run_cutting_plane(coords: DataMatrix, config: &FitConfig) -> Result<(ConstraintSet, FitReport)> {
    let m = coords.cols();
    if config.budget == 0 || config.budget > m {
        return Err(Error::InvalidBudget {
            budget: config.budget,
            max: m,
        });
    }
    if config.max_outer == 0 {
        return Err(Error::InvalidParameter("max_outer must be >= 1".into()));
    }
    let n = coords.rows();
    let uniform = vec![1.0 / n as f64; n];
    let first = most_violated_mask(&feature_scores(&uniform, &coords)?, config.budget)?;
    let mut cs = ConstraintSet::new(coords, KernelSpec::linear());
    cs.push(first)?;

    let mut t_trace = Vec::new();
    let mut iterations = 0;
    loop {
        let master = solve_restricted_master(&cs, &config.solver, &config.master)?;
        iterations += 1;
        t_trace.push(master.t);

        let next = most_violated_mask(&feature_scores(&master.alpha, cs.data())?, config.budget)?;
        let stalled = match t_trace.len() {
            k if k >= 2 => {
                let (prev, cur) = (t_trace[k - 2], t_trace[k - 1]);
                (cur - prev).abs() <= config.outer_tol * cur.abs().max(1.0)
            }
            _ => false,
        };
        let stop = if cs.contains(&next) {
            Some(StopReason::DuplicateMask)
        } else if stalled {
            Some(StopReason::ObjectiveStall)
        } else if iterations >= config.max_outer {
            Some(StopReason::MaxIterations)
        } else {
            None
        };
        if let Some(stop_reason) = stop {
            let report = FitReport {
                iterations,
                t_trace,
                stop_reason,
                master,
            };
            return Ok((cs, report));
        }
        cs.push(next)?;
    }
}

fn finish_model(
    variant: Variant,
    whitener: Option<Whitener>,
    cs: ConstraintSet,
    report: &FitReport,
    config: FitConfig,
) -> OskladModel {
    let master = &report.master;
    OskladModel::assemble(
        variant,
        whitener,
        cs,
        master.mu.clone(),
        master.alpha.clone(),
        master.svdd.radius_sq,
        config,
    )
}

/// Fit in input space with the linear kernel; masks select input features.
pub fn fit_linear(x: &DataMatrix, config: &FitConfig) -> Result<(OskladModel, FitReport)> {
    let (cs, report) = run_cutting_plane(x.clone(), config)?;
    let model = finish_model(Variant::LinearInputSpace, None, cs, &report, *config);
    Ok((model, report))
}

/// Map `x` into the whitened EKFS of `spec` and fit there; masks select EKFS
/// coordinates. The budget must not exceed the retained rank.
pub fn fit_ekfs(
    x: &DataMatrix,
    spec: KernelSpec,
    eigen_floor: f64,
    config: &FitConfig,
) -> Result<(OskladModel, FitReport)> {
    let whitener = build_whitener(x, spec, eigen_floor)?;
    let rank = whitener.retained_rank();
    if config.budget == 0 || config.budget > rank {
        return Err(Error::InvalidBudget {
            budget: config.budget,
            max: rank,
        });
    }
    let coords = crate::ekfs::embed_matrix(&whitener, x)?;
    let (cs, report) = run_cutting_plane(coords, config)?;
    let model = finish_model(Variant::EkfsNonlinear, Some(whitener), cs, &report, *config);
    Ok((model, report))
}

/// Score every row of `z`.
pub fn predict(model: &OskladModel, z: &DataMatrix) -> Result<Vec<f64>> {
    if z.cols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            found: z.cols(),
        });
    }
    z.iter_rows().map(|row| model.score(row)).collect()
}
