//! Sparse kernel learning for SVDD-based anomaly detection.
//!
//! The crate selects feature subsets for a Support Vector Data Description
//! by a cutting-plane loop: a restricted master problem (an SVDD over a
//! convex combination of masked kernels) alternates with a search for the
//! mask that most violates the current solution. For the linear kernel that
//! search is exact (sort per-feature weighted variances). Nonlinear kernels
//! are handled by first mapping the data into the whitened empirical kernel
//! feature space, where the canonical dot product reproduces the kernel, and
//! running the linear procedure there.
//!
//! Modules, bottom-up:
//!
//! | module | contents |
//! |--------|----------|
//! | [`kernel`] | kernels, data/mask types, masked Gram matrices |
//! | [`svdd`] | SMO solver for the SVDD dual, radius, distances |
//! | [`ekfs`] | empirical kernel map and its whitening |
//! | [`select`] | per-feature scores and the most violated mask |
//! | [`master`] | restricted master problem over a set of masks |
//! | [`osklad`] | cutting-plane fit, prediction |
//! | [`model_io`] | text model format |

pub mod ekfs;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod master;
pub mod model_io;
pub mod osklad;
pub mod select;
pub mod svdd;

pub use ekfs::{build_whitener, embed, embed_matrix, Whitener, DEFAULT_EIGEN_FLOOR};
pub use error::{Error, Result};
pub use kernel::{
    cross_kernel, gram, kernel_eval, DataMatrix, FeatureMask, GramMatrix, KernelKind, KernelSpec,
};
pub use master::{
    combined_gram, solve_restricted_master, ConstraintSet, MasterConfig, MasterMethod,
    MasterSolution, MklWeights,
};
pub use model_io::{load_model, model_to_string, parse_model, save_model};
pub use osklad::{
    fit_ekfs, fit_linear, predict, FitConfig, FitReport, OskladModel, StopReason, Variant,
};
pub use select::{feature_scores, most_violated_mask, FeatureScores};
pub use svdd::{
    distance_ratio, distance_sq_to_center, radius_squared, solve_svdd, svdd_objective, KernelSvdd,
    SolverConfig, SvddSolution, SUPPORT_FLOOR,
};
