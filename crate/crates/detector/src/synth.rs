//! Seeded synthetic cubes with planted single-pixel anomalies.
//!
//! Background pixels are independent zero-mean Gaussians: variance 1 on
//! ordinary bands and `informative_variance` on the informative ones.
//! Anomalous pixels get `+offset` added on every informative band. Noise is
//! drawn pixel by pixel in row-major order before anomaly positions are
//! sampled, so the background does not depend on the anomaly settings.

use std::fs;
use std::path::Path;

use osklad_core::DataMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cube::{ImageCube, Rect};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub informative: Vec<usize>,
    pub informative_variance: f64,
    pub anomalies: usize,
    pub offset: f64,
    /// Anomalies are never placed inside this rectangle.
    pub keep_out: Option<Rect>,
}

impl SynthConfig {
    /// 32x32 cube, 20 bands, bands 0..5 informative with 10x variance,
    /// 30 anomalies offset by 10.
    pub fn standard(seed: u64) -> Self {
        SynthConfig {
            seed,
            width: 32,
            height: 32,
            bands: 20,
            informative: (0..5).collect(),
            informative_variance: 10.0,
            anomalies: 30,
            offset: 10.0,
            keep_out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub cube: ImageCube,
    /// Row-major anomaly labels.
    pub truth: Vec<bool>,
}

pub fn gen_synthetic(config: &SynthConfig) -> Result<Synthetic> {
    let SynthConfig {
        width,
        height,
        bands,
        ..
    } = *config;
    if width == 0 || height == 0 || bands == 0 {
        return Err(Error::Geometry(format!(
            "need positive width, height and bands, got {width}x{height}x{bands}"
        )));
    }
    if let Some(&j) = config.informative.iter().find(|&&j| j >= bands) {
        return Err(Error::Geometry(format!(
            "informative band {j} outside 0..{bands}"
        )));
    }
    if !(config.informative_variance.is_finite() && config.informative_variance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "informative variance must be positive, got {}",
            config.informative_variance
        )));
    }
    if !config.offset.is_finite() {
        return Err(Error::InvalidParameter("offset must be finite".into()));
    }
    if let Some(r) = &config.keep_out {
        r.check_within(width, height)?;
    }
    let candidates: Vec<usize> = (0..width * height)
        .filter(|&p| {
            config
                .keep_out
                .is_none_or(|r| !r.contains(p % width, p / width))
        })
        .collect();
    if config.anomalies > candidates.len() {
        return Err(Error::Geometry(format!(
            "{} anomalies requested but only {} pixels are eligible",
            config.anomalies,
            candidates.len()
        )));
    }

    let mut informative = vec![false; bands];
    for &j in &config.informative {
        informative[j] = true;
    }
    let wide = Normal::new(0.0, config.informative_variance.sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut values = Vec::with_capacity(width * height * bands);
    for _ in 0..width * height {
        for &inf in &informative {
            let d = if inf { &wide } else { &unit };
            values.push(d.sample(&mut rng));
        }
    }

    let mut truth = vec![false; width * height];
    let mut picked = sample(&mut rng, candidates.len(), config.anomalies).into_vec();
    picked.sort_unstable();
    for k in picked {
        let p = candidates[k];
        truth[p] = true;
        for (j, &inf) in informative.iter().enumerate() {
            if inf {
                values[p * bands + j] += config.offset;
            }
        }
    }
    let pixels = DataMatrix::new(width * height, bands, values)?;
    Ok(Synthetic {
        cube: ImageCube::new(width, height, pixels)?,
        truth,
    })
}

/// Truth file: `height` lines of `width` characters, `1` marking anomalies.
pub fn truth_to_string(truth: &[bool], width: usize) -> String {
    let mut out = String::with_capacity(truth.len() + truth.len() / width.max(1));
    for row in truth.chunks(width.max(1)) {
        out.extend(row.iter().map(|&t| if t { '1' } else { '0' }));
        out.push('\n');
    }
    out
}

pub fn parse_truth(text: &str) -> Result<(usize, Vec<bool>)> {
    let mut width = None;
    let mut truth = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if *width.get_or_insert(line.len()) != line.len() {
            return Err(Error::Parse {
                path: "truth".into(),
                line: i + 1,
                msg: "ragged row".into(),
            });
        }
        for c in line.chars() {
            truth.push(match c {
                '0' => false,
                '1' => true,
                _ => {
                    return Err(Error::Parse {
                        path: "truth".into(),
                        line: i + 1,
                        msg: format!("unexpected {c:?}"),
                    })
                }
            });
        }
    }
    Ok((width.unwrap_or(0), truth))
}

pub fn write_truth(truth: &[bool], width: usize, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, truth_to_string(truth, width))?;
    Ok(())
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<(usize, Vec<bool>)> {
    parse_truth(&fs::read_to_string(path)?)
}
