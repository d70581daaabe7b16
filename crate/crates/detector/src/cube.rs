//! Image cubes on disk: a CSV with one pixel per row and one band per column,
//! plus a one-line side header `width=W height=H bands=M format=csv`.
//! Pixels are stored row-major from the top-left corner.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use osklad_core::DataMatrix;

use crate::error::{Error, Result};

/// Axis-aligned pixel rectangle, written `x,y,w,h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Rect { x, y, w, h }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    /// Error unless the rectangle is non-empty and lies inside a `width x height` image.
    pub fn check_within(&self, width: usize, height: usize) -> Result<()> {
        if self.w == 0 || self.h == 0 {
            return Err(Error::Geometry(format!("rectangle {self} is empty")));
        }
        if self.x + self.w > width || self.y + self.h > height {
            return Err(Error::Geometry(format!(
                "rectangle {self} exceeds the {width}x{height} image"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.x, self.y, self.w, self.h)
    }
}

impl FromStr for Rect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Geometry(format!("expected x,y,w,h, got {s:?}"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let v: Vec<usize> = parts
            .iter()
            .map(|p| p.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Ok(Rect::new(v[0], v[1], v[2], v[3]))
    }
}

/// Side-header contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
}

impl fmt::Display for Header {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "width={} height={} bands={} format=csv",
            self.width, self.height, self.bands
        )
    }
}

impl FromStr for Header {
    type Err = Error;

    /// `key=value` tokens in any order; `format` is optional and must be `csv`.
    fn from_str(s: &str) -> Result<Self> {
        let (mut width, mut height, mut bands) = (None, None, None);
        for token in s.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Header(format!("expected key=value, got {token:?}")))?;
            let slot = match key {
                "width" => &mut width,
                "height" => &mut height,
                "bands" => &mut bands,
                "format" if value == "csv" => continue,
                "format" => return Err(Error::Header(format!("unsupported format {value:?}"))),
                _ => return Err(Error::Header(format!("unknown key {key:?}"))),
            };
            let n: usize = value
                .parse()
                .map_err(|_| Error::Header(format!("{key} must be an integer, got {value:?}")))?;
            if n == 0 {
                return Err(Error::Header(format!("{key} must be positive")));
            }
            if slot.replace(n).is_some() {
                return Err(Error::Header(format!("{key} given twice")));
            }
        }
        let need =
            |v: Option<usize>, k: &str| v.ok_or_else(|| Error::Header(format!("missing {k}")));
        Ok(Header {
            width: need(width, "width")?,
            height: need(height, "height")?,
            bands: need(bands, "bands")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageCube {
    width: usize,
    height: usize,
    pixels: DataMatrix,
}

impl ImageCube {
    /// `pixels` holds one row per pixel in row-major image order.
    pub fn new(width: usize, height: usize, pixels: DataMatrix) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!("empty image {width}x{height}")));
        }
        if pixels.rows() != width * height {
            return Err(Error::Shape {
                what: "pixel rows",
                expected: width * height,
                found: pixels.rows(),
            });
        }
        Ok(ImageCube {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.pixels.cols()
    }

    pub fn header(&self) -> Header {
        Header {
            width: self.width,
            height: self.height,
            bands: self.bands(),
        }
    }

    pub fn pixels(&self) -> &DataMatrix {
        &self.pixels
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        self.pixels.row(self.index(x, y))
    }

    /// Row indices of the pixels inside `rect`, row-major.
    pub fn rect_indices(&self, rect: &Rect) -> Result<Vec<usize>> {
        rect.check_within(self.width, self.height)?;
        Ok((rect.y..rect.y + rect.h)
            .flat_map(|y| (rect.x..rect.x + rect.w).map(move |x| (x, y)))
            .map(|(x, y)| self.index(x, y))
            .collect())
    }

    /// Pixels inside `rect` as a data matrix.
    pub fn patch(&self, rect: &Rect) -> Result<DataMatrix> {
        Ok(self.pixels.select_rows(&self.rect_indices(rect)?)?)
    }
}

/// Default header location for a data file: same path, extension `hdr`.
pub fn default_header_path(data: &Path) -> std::path::PathBuf {
    data.with_extension("hdr")
}

/// Load a cube from its CSV and side header.
pub fn load_cube(data: impl AsRef<Path>, header: impl AsRef<Path>) -> Result<ImageCube> {
    let header: Header = fs::read_to_string(header.as_ref())?.trim().parse()?;
    let data = data.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(data)?;
    let mut values = Vec::with_capacity(header.width * header.height * header.bands);
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        rows += 1;
        let parse_err = |msg: String| Error::Parse {
            path: data.display().to_string(),
            line: rows,
            msg,
        };
        if record.len() != header.bands {
            return Err(parse_err(format!(
                "expected {} bands, found {}",
                header.bands,
                record.len()
            )));
        }
        for cell in record.iter() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite value {cell:?}")));
            }
            values.push(v);
        }
    }
    if rows != header.width * header.height {
        return Err(Error::Shape {
            what: "pixel rows",
            expected: header.width * header.height,
            found: rows,
        });
    }
    let pixels = DataMatrix::new(rows, header.bands, values)?;
    ImageCube::new(header.width, header.height, pixels)
}

/// Write a cube as CSV plus side header. Values use the shortest decimal form
/// that reads back to the same float.
pub fn write_cube(
    cube: &ImageCube,
    data: impl AsRef<Path>,
    header: impl AsRef<Path>,
) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(data.as_ref())?;
    for row in cube.pixels.iter_rows() {
        writer.write_record(row.iter().map(|v| v.to_string()))?;
    }
    writer.flush()?;
    fs::write(header.as_ref(), format!("{}\n", cube.header()))?;
    Ok(())
}
