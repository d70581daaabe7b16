//! Minimax bandwidth selection for the Gaussian kernel.
//!
//! For each candidate sigma a plain RBF SVDD (C = 1) is trained on the
//! background patch, and the largest score over the pixels of `n_regions`
//! seeded random windows is recorded. The sigma with the smallest such
//! maximum wins; maxima within a relative `TIE_TOL` of each other count as
//! equal and the smaller sigma is preferred.

use osklad_core::{DataMatrix, KernelSpec, KernelSvdd, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cube::{ImageCube, Rect};
use crate::error::{Error, Result};

/// Relative difference below which two window maxima are tied.
pub const TIE_TOL: f64 = 1e-3;

/// Default number of random background windows.
pub const DEFAULT_REGIONS: usize = 10;

/// Multiples of the median pairwise patch distance tried by default.
const GRID_MULTIPLES: [f64; 7] = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthConfig {
    pub patch: Rect,
    pub n_regions: usize,
    /// Window width and height.
    pub region: (usize, usize),
    pub sigma_grid: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthReport {
    pub sigma: f64,
    /// `(sigma, max window score)` for every candidate, ascending in sigma.
    pub candidates: Vec<(f64, f64)>,
    pub windows: Vec<Rect>,
}

/// Error if every row of `x` is identical.
pub fn check_patch(x: &DataMatrix) -> Result<()> {
    let first = x.row(0);
    if x.iter_rows().all(|r| r == first) {
        return Err(Error::DegeneratePatch);
    }
    Ok(())
}

/// Median of the pairwise Euclidean distances between rows of `x`.
pub fn median_distance(x: &DataMatrix) -> f64 {
    let n = x.rows();
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let s: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d.push(s.sqrt());
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    if d.len() % 2 == 1 {
        d[mid]
    } else {
        0.5 * (d[mid - 1] + d[mid])
    }
}

/// Geometric grid around the median pairwise distance of the patch.
pub fn default_sigma_grid(patch: &DataMatrix) -> Result<Vec<f64>> {
    check_patch(patch)?;
    let med = median_distance(patch);
    let base = if med > 0.0 { med } else { 1.0 };
    Ok(GRID_MULTIPLES.iter().map(|m| m * base).collect())
}

/// Seeded windows of size `region`, placed uniformly inside the image.
pub fn random_windows(
    width: usize,
    height: usize,
    region: (usize, usize),
    count: usize,
    seed: u64,
) -> Result<Vec<Rect>> {
    let (w, h) = region;
    if w == 0 || h == 0 || w > width || h > height {
        return Err(Error::Geometry(format!(
            "{w}x{h} windows do not fit a {width}x{height} image"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let x = rng.random_range(0..=width - w);
            let y = rng.random_range(0..=height - h);
            Rect::new(x, y, w, h)
        })
        .collect())
}

fn tied(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= TIE_TOL * a.abs().max(b.abs())
}

pub fn select_bandwidth(cube: &ImageCube, config: &BandwidthConfig) -> Result<BandwidthReport> {
    if config.sigma_grid.is_empty() {
        return Err(Error::InvalidParameter("sigma grid is empty".into()));
    }
    if let Some(bad) = config
        .sigma_grid
        .iter()
        .find(|s| !(s.is_finite() && **s > 0.0))
    {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive and finite, got {bad}"
        )));
    }
    if config.n_regions == 0 {
        return Err(Error::InvalidParameter("n_regions must be >= 1".into()));
    }
    let train = cube.patch(&config.patch)?;
    check_patch(&train)?;
    let windows = random_windows(
        cube.width(),
        cube.height(),
        config.region,
        config.n_regions,
        config.seed,
    )?;
    let mut pixels = Vec::new();
    for w in &windows {
        pixels.extend(cube.rect_indices(w)?);
    }

    let mut grid = config.sigma_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut candidates = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for sigma in grid {
        let svdd = KernelSvdd::fit(
            KernelSpec::rbf(sigma)?,
            train.clone(),
            &SolverConfig::default(),
        )?;
        let mut worst = f64::NEG_INFINITY;
        for &p in &pixels {
            worst = worst.max(svdd.score(cube.pixels().row(p))?);
        }
        candidates.push((sigma, worst));
        best = match best {
            Some((_, m)) if worst >= m || tied(worst, m) => best,
            _ => Some((sigma, worst)),
        };
    }
    Ok(BandwidthReport {
        sigma: best.expect("grid is non-empty").0,
        candidates,
        windows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_rule_is_relative() {
        assert!(tied(1.0, 1.0005));
        assert!(!tied(1.0, 1.01));
        assert!(tied(0.0, 0.0));
    }

    #[test]
    fn windows_fit_and_repeat() {
        let a = random_windows(10, 7, (3, 2), 20, 5).unwrap();
        assert!(a.iter().all(|r| r.check_within(10, 7).is_ok()));
        assert_eq!(a, random_windows(10, 7, (3, 2), 20, 5).unwrap());
        assert!(random_windows(10, 7, (11, 2), 1, 5).is_err());
    }

    #[test]
    fn median_of_pairwise_distances() {
        let x = DataMatrix::new(3, 1, vec![0.0, 1.0, 3.0]).unwrap();
        // distances 1, 3, 2
        assert_eq!(median_distance(&x), 2.0);
    }

    #[test]
    fn identical_patch_is_degenerate() {
        let x = DataMatrix::new(3, 2, vec![1.0; 6]).unwrap();
        assert!(matches!(check_patch(&x), Err(Error::DegeneratePatch)));
        assert!(default_sigma_grid(&x).is_err());
    }
}
