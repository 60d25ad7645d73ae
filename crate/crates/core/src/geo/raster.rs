//! Regular lon/lat raster grids in the plain-text ESRI ASCII layout.

use std::fmt::Write as _;
use std::path::Path;

use super::geometry::Rect;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RasterGrid {
    pub ncols: usize,
    pub nrows: usize,
    /// Lower-left corner, degrees.
    pub xll: f64,
    pub yll: f64,
    /// Cell edge length in degrees.
    pub cellsize: f64,
    pub nodata: Option<f64>,
    /// Row-major, first row is the northernmost.
    values: Vec<f64>,
}

impl RasterGrid {
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        nodata: Option<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::invalid("raster dimensions must be positive"));
        }
        if !(cellsize > 0.0) || !cellsize.is_finite() {
            return Err(Error::invalid(format!("raster cellsize {cellsize} must be > 0")));
        }
        if values.len() != ncols * nrows {
            return Err(Error::invalid(format!(
                "raster has {} values, expected {} x {}",
                values.len(),
                nrows,
                ncols
            )));
        }
        Ok(RasterGrid {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata,
            values,
        })
    }

    pub fn filled(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        value: f64,
    ) -> Result<Self> {
        Self::new(ncols, nrows, xll, yll, cellsize, None, vec![value; ncols * nrows])
    }

    pub fn cell_size_arcsec(&self) -> f64 {
        self.cellsize * 3600.0
    }

    pub fn extent(&self) -> Rect {
        Rect {
            min_x: self.xll,
            min_y: self.yll,
            max_x: self.xll + self.ncols as f64 * self.cellsize,
            max_y: self.yll + self.nrows as f64 * self.cellsize,
        }
    }

    pub fn cell_rect(&self, row: usize, col: usize) -> Rect {
        let top = self.yll + (self.nrows - row) as f64 * self.cellsize;
        let left = self.xll + col as f64 * self.cellsize;
        Rect {
            min_x: left,
            min_y: top - self.cellsize,
            max_x: left + self.cellsize,
            max_y: top,
        }
    }

    pub fn raw(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    /// Cell value, `None` for nodata or non-finite cells.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.raw(row, col);
        if !v.is_finite() || self.nodata == Some(v) {
            None
        } else {
            Some(v)
        }
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.ncols + col] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            if self.nodata != Some(*v) {
                *v *= factor;
            }
        }
        out
    }

    pub fn aligned_with(&self, other: &RasterGrid) -> bool {
        let tol = 1e-9 * self.cellsize;
        self.ncols == other.ncols
            && self.nrows == other.nrows
            && (self.xll - other.xll).abs() <= tol
            && (self.yll - other.yll).abs() <= tol
            && (self.cellsize - other.cellsize).abs() <= tol
    }

    /// Row/column ranges of cells whose rectangles may overlap `bbox`.
    pub fn window(&self, bbox: &Rect) -> Option<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        let ext = self.extent();
        if !ext.overlaps(bbox) {
            return None;
        }
        let c0 = ((bbox.min_x - self.xll) / self.cellsize).floor().max(0.0) as usize;
        let c1 = (((bbox.max_x - self.xll) / self.cellsize).ceil() as usize).min(self.ncols);
        let top = ext.max_y;
        let r0 = ((top - bbox.max_y) / self.cellsize).floor().max(0.0) as usize;
        let r1 = (((top - bbox.min_y) / self.cellsize).ceil() as usize).min(self.nrows);
        if c0 >= c1 || r0 >= r1 {
            return None;
        }
        Some((r0..r1, c0..c1))
    }

    pub fn parse_ascii(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut header = std::collections::BTreeMap::new();
        let mut center_x = false;
        let mut center_y = false;
        for _ in 0..6 {
            let (no, line) = lines
                .next()
                .ok_or_else(|| Error::schema(path, 1, "raster header shorter than 6 lines"))?;
            let mut parts = line.split_whitespace();
            let key = parts
                .next()
                .ok_or_else(|| Error::schema(path, no as u64 + 1, "empty header line"))?
                .to_ascii_lowercase();
            let value: f64 = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| {
                    Error::schema(path, no as u64 + 1, format!("header `{key}` needs a number"))
                })?;
            let key = match key.as_str() {
                "xllcorner" | "xll" => "xll",
                "xllcenter" => {
                    center_x = true;
                    "xll"
                }
                "yllcorner" | "yll" => "yll",
                "yllcenter" => {
                    center_y = true;
                    "yll"
                }
                "nodata_value" | "nodata" => "nodata",
                "ncols" => "ncols",
                "nrows" => "nrows",
                "cellsize" => "cellsize",
                other => {
                    return Err(Error::schema(
                        path,
                        no as u64 + 1,
                        format!("unknown raster header key `{other}`"),
                    ))
                }
            };
            header.insert(key, value);
        }
        let get = |k: &str| {
            header
                .get(k)
                .copied()
                .ok_or_else(|| Error::schema(path, 1, format!("raster header missing `{k}`")))
        };
        let ncols = get("ncols")? as usize;
        let nrows = get("nrows")? as usize;
        let cellsize = get("cellsize")?;
        let mut xll = get("xll")?;
        let mut yll = get("yll")?;
        if center_x {
            xll -= 0.5 * cellsize;
        }
        if center_y {
            yll -= 0.5 * cellsize;
        }
        let nodata = header.get("nodata").copied();

        let mut values = Vec::with_capacity(ncols * nrows);
        for (no, line) in lines {
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| {
                    Error::schema(path, no as u64 + 1, format!("bad raster value `{tok}`"))
                })?;
                values.push(v);
            }
        }
        Self::new(ncols, nrows, xll, yll, cellsize, nodata, values)
            .map_err(|e| Error::schema(path, 7, e.to_string()))
    }

    pub fn read_ascii(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_ascii(&text, path)
    }

    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ncols {}", self.ncols);
        let _ = writeln!(s, "nrows {}", self.nrows);
        let _ = writeln!(s, "xllcorner {}", self.xll);
        let _ = writeln!(s, "yllcorner {}", self.yll);
        let _ = writeln!(s, "cellsize {}", self.cellsize);
        let _ = writeln!(s, "NODATA_value {}", self.nodata.unwrap_or(-9999.0));
        for row in self.values.chunks(self.ncols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn write_ascii(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_ascii()).map_err(|e| Error::io(path, e))
    }
}
