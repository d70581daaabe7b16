//! Per-pixel score maps, their min-max normalisation, and 16-bit PGM output.
//!
//! PGM layout: `P5\n<width> <height>\n65535\n` followed by one big-endian
//! `u16` per pixel, row-major from the top-left corner, with value
//! `round(normalized * 65535)`.

use std::fs;
use std::path::Path;

use osklad_core::{predict, OskladModel};

use crate::cube::ImageCube;
use crate::error::{Error, Result};

const PGM_MAX: f64 = 65535.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    width: usize,
    height: usize,
    raw: Vec<f64>,
    normalized: Vec<f64>,
}

impl ScoreMap {
    /// Wrap raw scores (row-major). NaN is rejected; +inf is allowed and
    /// normalises to 1.
    pub fn from_raw(width: usize, height: usize, raw: Vec<f64>) -> Result<Self> {
        if raw.len() != width * height {
            return Err(Error::Shape {
                what: "score map pixels",
                expected: width * height,
                found: raw.len(),
            });
        }
        if raw.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::InvalidParameter(
                "score map holds NaN or -inf".into(),
            ));
        }
        let normalized = normalize(&raw);
        Ok(ScoreMap {
            width,
            height,
            raw,
            normalized,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    /// Quantised 16-bit levels, as written to the PGM.
    pub fn levels(&self) -> Vec<u16> {
        self.normalized
            .iter()
            .map(|v| (v * PGM_MAX).round() as u16)
            .collect()
    }
}

/// Global min-max normalisation to `[0, 1]`.
///
/// Infinite scores (a zero-radius sphere) map to 1 and the finite ones are
/// stretched over their own range. A map whose finite part is constant
/// normalises to zeros there.
pub fn normalize(raw: &[f64]) -> Vec<f64> {
    let finite = raw.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    raw.iter()
        .map(|&v| {
            if v == f64::INFINITY {
                1.0
            } else if span > 0.0 {
                ((v - lo) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// Score every pixel of `cube` with `model`.
pub fn build_scoremap(model: &OskladModel, cube: &ImageCube) -> Result<ScoreMap> {
    let raw = predict(model, cube.pixels())?;
    ScoreMap::from_raw(cube.width(), cube.height(), raw)
}

/// Encoded PGM file contents.
pub fn pgm_bytes(map: &ScoreMap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", map.width, map.height).into_bytes();
    out.reserve(2 * map.raw.len());
    for level in map.levels() {
        out.extend_from_slice(&level.to_be_bytes());
    }
    out
}

pub fn write_pgm(map: &ScoreMap, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, pgm_bytes(map))?;
    Ok(())
}

/// Decoded 16-bit PGM: `(width, height, levels)`.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    // header: magic, width, height, maxval, each followed by whitespace
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Pgm("truncated header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if fields[0] != "P5" {
        return Err(Error::Pgm(format!("expected P5, got {:?}", fields[0])));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Pgm(format!("bad header field {s:?}")))
    };
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval != 65535 {
        return Err(Error::Pgm(format!("expected maxval 65535, got {maxval}")));
    }
    let body = bytes.get(pos..).unwrap_or_default();
    if body.len() != 2 * width * height {
        return Err(Error::Pgm(format!(
            "raster holds {} bytes, expected {}",
            body.len(),
            2 * width * height
        )));
    }
    let levels = body
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Ok((width, height, levels))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u16>)> {
    parse_pgm(&fs::read(path)?)
}

/// CSV with columns `x,y,score,normalized`, one row per pixel.
pub fn write_score_csv(map: &ScoreMap, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "score", "normalized"])?;
    for (i, (r, n)) in map.raw.iter().zip(&map.normalized).enumerate() {
        let (x, y) = (i % map.width, i / map.width);
        w.write_record([x.to_string(), y.to_string(), r.to_string(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_map_normalises_to_zero() {
        assert_eq!(normalize(&[2.5, 2.5, 2.5]), vec![0.0; 3]);
    }

    #[test]
    fn extremes_map_to_zero_and_one() {
        let n = normalize(&[1.0, 3.0, 2.0]);
        assert_eq!(n, vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn infinite_scores_map_to_one() {
        assert_eq!(normalize(&[0.0, f64::INFINITY, 0.0]), vec![0.0, 1.0, 0.0]);
        assert_eq!(normalize(&[1.0, 2.0, f64::INFINITY]), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn pgm_examples() {
        let one = ScoreMap::from_raw(1, 1, vec![4.0]).unwrap();
        assert_eq!(one.levels(), vec![0]);
        let two = ScoreMap::from_raw(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(two.levels(), vec![0, 65535]);
        let bytes = pgm_bytes(&two);
        assert_eq!(&bytes[..bytes.len() - 4], b"P5\n2 1\n65535\n");
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 0, 0xff, 0xff]);
    }

    #[test]
    fn pgm_round_trip() {
        let raw: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let map = ScoreMap::from_raw(4, 3, raw).unwrap();
        let (w, h, levels) = parse_pgm(&pgm_bytes(&map)).unwrap();
        assert_eq!((w, h), (4, 3));
        assert_eq!(levels, map.levels());
    }

    #[test]
    fn malformed_pgm_is_rejected() {
        assert!(parse_pgm(b"P2\n1 1\n65535\n\0\0").is_err());
        assert!(parse_pgm(b"P5\n1 1\n255\n\0").is_err());
        assert!(parse_pgm(b"P5\n2 1\n65535\n\0\0").is_err());
        assert!(parse_pgm(b"P5\n2").is_err());
    }

    #[test]
    fn nan_scores_are_rejected() {
        assert!(ScoreMap::from_raw(1, 1, vec![f64::NAN]).is_err());
        assert!(ScoreMap::from_raw(2, 1, vec![0.0]).is_err());
    }
}
