//! Text serialization of [`OskladModel`].
//!
//! The format is line oriented, whitespace separated, and versioned by its
//! first line. Floats are written with 17 significant digits so a round trip
//! reproduces every value bit for bit. Blank lines and lines starting with
//! `#` are ignored when reading.
//!
//! ```text
//! osklad-model 1
//! variant ekfs                     # or: linear
//! kernel rbf 2.0000000000000000e1  # or: kernel linear
//! eigen_floor 1.0000000000000000e-10   (ekfs only)
//! budget 10
//! c 1.0000000000000000e0
//! kkt_tol ...
//! max_passes 10000
//! master_method interior-point     # or: projected-gradient
//! mu_tol ...
//! master_max_outer 200
//! gap_tol ...
//! outer_tol ...
//! max_outer 50
//! radius_sq ...
//! basis <n> <M>                    (ekfs only; n rows follow)
//! transform <r> <n>                (ekfs only; r rows follow)
//! coords <N> <D>                   (N rows follow)
//! masks <p> <D>                    (p rows of selected indices follow)
//! mu <p values>
//! alpha <N values>
//! end
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::ekfs::Whitener;
use crate::error::{Error, Result};
use crate::kernel::{DataMatrix, FeatureMask, KernelKind, KernelSpec};
use crate::master::{MasterConfig, MasterMethod, MklWeights};
use crate::osklad::{FitConfig, OskladModel, Variant};
use crate::svdd::SolverConfig;

const MAGIC: &str = "osklad-model";
const VERSION: u32 = 1;

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_matrix(out: &mut String, name: &str, m: &DataMatrix) {
    let _ = writeln!(out, "{name} {} {}", m.rows(), m.cols());
    for row in m.iter_rows() {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

/// Serialize a model to the text format.
pub fn model_to_string(model: &OskladModel) -> String {
    let mut out = String::new();
    let cfg = model.config();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    match model.variant() {
        Variant::LinearInputSpace => {
            let _ = writeln!(out, "variant linear");
            let _ = writeln!(out, "kernel linear");
        }
        Variant::EkfsNonlinear => {
            let w = model.whitener().expect("EKFS model carries a whitener");
            let _ = writeln!(out, "variant ekfs");
            match w.spec().bandwidth() {
                Some(s) => {
                    let _ = writeln!(out, "kernel rbf {}", fmt_f64(s));
                }
                None => {
                    let _ = writeln!(out, "kernel linear");
                }
            }
            let _ = writeln!(out, "eigen_floor {}", fmt_f64(w.eigen_floor()));
        }
    }
    let _ = writeln!(out, "budget {}", cfg.budget);
    let _ = writeln!(out, "c {}", fmt_f64(cfg.solver.c));
    let _ = writeln!(out, "kkt_tol {}", fmt_f64(cfg.solver.kkt_tol));
    let _ = writeln!(out, "max_passes {}", cfg.solver.max_passes);
    let _ = writeln!(out, "master_method {}", cfg.master.method.name());
    let _ = writeln!(out, "mu_tol {}", fmt_f64(cfg.master.mu_tol));
    let _ = writeln!(out, "master_max_outer {}", cfg.master.max_outer);
    let _ = writeln!(out, "gap_tol {}", fmt_f64(cfg.master.gap_tol));
    let _ = writeln!(out, "outer_tol {}", fmt_f64(cfg.outer_tol));
    let _ = writeln!(out, "max_outer {}", cfg.max_outer);
    let _ = writeln!(out, "radius_sq {}", fmt_f64(model.radius_sq()));
    if let Some(w) = model.whitener() {
        write_matrix(&mut out, "basis", w.basis());
        write_matrix(&mut out, "transform", &w.transform());
    }
    write_matrix(&mut out, "coords", model.training_coords());
    let masks = model.masks();
    let _ = writeln!(
        out,
        "masks {} {}",
        masks.len(),
        model.training_coords().cols()
    );
    for m in masks {
        let idx: Vec<String> = m.indices().iter().map(|j| j.to_string()).collect();
        let _ = writeln!(out, "{}", idx.join(" "));
    }
    let mu: Vec<String> = model.mu().as_slice().iter().map(|&v| fmt_f64(v)).collect();
    let _ = writeln!(out, "mu {}", mu.join(" "));
    let alpha: Vec<String> = model.alpha().iter().map(|&v| fmt_f64(v)).collect();
    let _ = writeln!(out, "alpha {}", alpha.join(" "));
    let _ = writeln!(out, "end");
    out
}

pub fn save_model(model: &OskladModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<OskladModel> {
    parse_model(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next_tokens(&mut self) -> Result<Vec<&'a str>> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            return Ok(l.split_whitespace().collect());
        }
        Err(self.err("unexpected end of file"))
    }

    /// Next line, which must start with `key`; returns the remaining tokens.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let t = self.next_tokens()?;
        if t[0] != key {
            return Err(self.err(format!("expected `{key}`, found `{}`", t[0])));
        }
        Ok(t[1..].to_vec())
    }

    fn f64_at(&self, tok: &str) -> Result<f64> {
        let v: f64 = tok
            .parse()
            .map_err(|_| self.err(format!("bad number `{tok}`")))?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite number `{tok}`")));
        }
        Ok(v)
    }

    fn usize_at(&self, tok: &str) -> Result<usize> {
        tok.parse()
            .map_err(|_| self.err(format!("bad integer `{tok}`")))
    }

    fn scalar_f64(&mut self, key: &str) -> Result<f64> {
        let t = self.keyed(key)?;
        if t.len() != 1 {
            return Err(self.err(format!("`{key}` takes one value")));
        }
        self.f64_at(t[0])
    }

    fn scalar_usize(&mut self, key: &str) -> Result<usize> {
        let t = self.keyed(key)?;
        if t.len() != 1 {
            return Err(self.err(format!("`{key}` takes one value")));
        }
        self.usize_at(t[0])
    }

    fn vector(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        let t = self.keyed(key)?;
        if t.len() != len {
            return Err(self.err(format!("`{key}` expects {len} values, found {}", t.len())));
        }
        t.iter().map(|s| self.f64_at(s)).collect()
    }

    fn matrix(&mut self, key: &str) -> Result<DataMatrix> {
        let t = self.keyed(key)?;
        if t.len() != 2 {
            return Err(self.err(format!("`{key}` header needs rows and cols")));
        }
        let (rows, cols) = (self.usize_at(t[0])?, self.usize_at(t[1])?);
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let t = self.next_tokens()?;
            if t.len() != cols {
                return Err(self.err(format!("row has {} values, expected {cols}", t.len())));
            }
            for s in t {
                values.push(self.f64_at(s)?);
            }
        }
        DataMatrix::new(rows, cols, values).map_err(|e| self.err(e.to_string()))
    }
}

/// Parse a model from its text form.
pub fn parse_model(text: &str) -> Result<OskladModel> {
    let mut lines = Lines::new(text);
    let head = lines.next_tokens()?;
    if head.len() != 2 || head[0] != MAGIC {
        return Err(lines.err("not an osklad model file"));
    }
    if lines.usize_at(head[1])? != VERSION as usize {
        return Err(lines.err(format!("unsupported version {}", head[1])));
    }
    let variant = match lines.keyed("variant")?.as_slice() {
        ["linear"] => Variant::LinearInputSpace,
        ["ekfs"] => Variant::EkfsNonlinear,
        other => return Err(lines.err(format!("unknown variant {other:?}"))),
    };
    let spec = match lines.keyed("kernel")?.as_slice() {
        ["linear"] => KernelSpec::linear(),
        ["rbf", s] => {
            let s = lines.f64_at(s)?;
            KernelSpec::rbf(s).map_err(|e| lines.err(e.to_string()))?
        }
        other => return Err(lines.err(format!("unknown kernel {other:?}"))),
    };
    let eigen_floor = match variant {
        Variant::EkfsNonlinear => Some(lines.scalar_f64("eigen_floor")?),
        Variant::LinearInputSpace => {
            if spec.kind() != KernelKind::Linear {
                return Err(lines.err("linear variant requires the linear kernel"));
            }
            None
        }
    };
    let budget = lines.scalar_usize("budget")?;
    let solver = SolverConfig {
        c: lines.scalar_f64("c")?,
        kkt_tol: lines.scalar_f64("kkt_tol")?,
        max_passes: lines.scalar_usize("max_passes")?,
    };
    let method = match lines.keyed("master_method")?.as_slice() {
        [name] => MasterMethod::from_name(name)
            .ok_or_else(|| lines.err(format!("unknown master method `{name}`")))?,
        _ => return Err(lines.err("`master_method` takes one value")),
    };
    let master = MasterConfig {
        method,
        mu_tol: lines.scalar_f64("mu_tol")?,
        max_outer: lines.scalar_usize("master_max_outer")?,
        gap_tol: lines.scalar_f64("gap_tol")?,
    };
    let outer_tol = lines.scalar_f64("outer_tol")?;
    let max_outer = lines.scalar_usize("max_outer")?;
    let radius_sq = lines.scalar_f64("radius_sq")?;

    let whitener = match eigen_floor {
        Some(floor) => {
            let basis = lines.matrix("basis")?;
            let transform = lines.matrix("transform")?;
            Some(
                Whitener::from_parts(basis, spec, transform, floor)
                    .map_err(|e| lines.err(e.to_string()))?,
            )
        }
        None => None,
    };
    let coords = lines.matrix("coords")?;
    let head = lines.keyed("masks")?;
    if head.len() != 2 {
        return Err(lines.err("`masks` header needs count and length"));
    }
    let (p, len) = (lines.usize_at(head[0])?, lines.usize_at(head[1])?);
    let mut masks = Vec::with_capacity(p);
    for _ in 0..p {
        let idx: Vec<usize> = lines
            .next_tokens()?
            .iter()
            .map(|s| lines.usize_at(s))
            .collect::<Result<_>>()?;
        masks.push(FeatureMask::from_indices(len, &idx).map_err(|e| lines.err(e.to_string()))?);
    }
    let mu = lines.vector("mu", p)?;
    let mu = MklWeights::new(mu).map_err(|e| lines.err(e.to_string()))?;
    let alpha = lines.vector("alpha", coords.rows())?;
    lines.keyed("end")?;

    let config = FitConfig {
        budget,
        solver,
        master,
        outer_tol,
        max_outer,
    };
    OskladModel::from_parts(
        variant, whitener, coords, masks, mu, alpha, radius_sq, config,
    )
}
