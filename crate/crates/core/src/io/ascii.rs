//! ESRI ASCII grid raster format.
//!
//! Six header lines in canonical order, then row-major samples, one grid
//! row per line:
//!
//! ```text
//! ncols 2
//! nrows 2
//! xllcorner 0
//! yllcorner 0
//! cellsize 1
//! NODATA_value -9999
//! 1 2
//! 5 -9999
//! ```
//!
//! Values are printed with the shortest representation that parses back to
//! the same `f64`, so a write/read cycle is exact for every finite sample.
//! The header stores the lower-left corner; reconstruction of `y_origin`
//! (`yllcorner + nrows * cellsize`) is exact whenever that sum is exactly
//! representable, which holds for the integer-style origins used here.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{GridGeometry, Raster};
use crate::scalar::Scalar;

pub const DEFAULT_NODATA: f64 = -9999.0;

const HEADER_KEYS: [&str; 6] = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "NODATA_value"];

pub fn write<T: Scalar>(raster: &Raster<T>, path: &Path) -> Result<()> {
    let g = raster.geometry();
    let io_err = |e| Error::io(path, e);
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "ncols {}", g.width()).map_err(io_err)?;
    writeln!(w, "nrows {}", g.height()).map_err(io_err)?;
    writeln!(w, "xllcorner {}", g.x_origin()).map_err(io_err)?;
    writeln!(w, "yllcorner {}", g.y_origin() - g.height() as f64 * g.pixel_size()).map_err(io_err)?;
    writeln!(w, "cellsize {}", g.pixel_size()).map_err(io_err)?;
    writeln!(w, "NODATA_value {}", DEFAULT_NODATA).map_err(io_err)?;
    let samples = raster.samples();
    let valid = raster.validity();
    let mut line = String::new();
    for row in 0..g.height() {
        line.clear();
        for col in 0..g.width() {
            if col > 0 {
                line.push(' ');
            }
            let i = g.index(col, row);
            if valid[i] {
                line.push_str(&samples[i].as_f64().to_string());
            } else {
                line.push_str(&DEFAULT_NODATA.to_string());
            }
        }
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read<T: Scalar>(path: &Path) -> Result<Raster<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let mut header = [0.0f64; 6];
    for (key_idx, key) in HEADER_KEYS.iter().enumerate() {
        let (line_idx, line) = lines.next().ok_or_else(|| {
            Error::parse(path, format!("line {}", key_idx + 1), format!("missing header line '{key}'"))
        })?;
        let loc = format!("line {}", line_idx + 1);
        let mut parts = line.split_whitespace();
        let found = parts.next().unwrap_or("");
        if !found.eq_ignore_ascii_case(key) {
            return Err(Error::parse(path, loc, format!("expected header '{key}', found '{found}'")));
        }
        let value = parts
            .next()
            .ok_or_else(|| Error::parse(path, loc.clone(), format!("header '{key}' has no value")))?;
        if parts.next().is_some() {
            return Err(Error::parse(path, loc, format!("header '{key}' has trailing tokens")));
        }
        header[key_idx] = value
            .parse::<f64>()
            .map_err(|_| Error::parse(path, loc, format!("header '{key}' value '{value}' is not a number")))?;
    }

    let [ncols, nrows, xll, yll, cellsize, nodata] = header;
    if ncols.fract() != 0.0 || nrows.fract() != 0.0 || ncols < 1.0 || nrows < 1.0 {
        return Err(Error::parse(path, "line 1", format!("grid size {ncols}x{nrows} must be positive integers")));
    }
    let (width, height) = (ncols as usize, nrows as usize);
    let geometry = GridGeometry::new(width, height, xll, yll + nrows * cellsize, cellsize)
        .map_err(|e| Error::parse(path, "header", e.to_string()))?;

    let mut samples: Vec<T> = Vec::with_capacity(geometry.len());
    let mut valid: Vec<bool> = Vec::with_capacity(geometry.len());
    let mut last_line = 6usize;
    for (line_idx, line) in lines {
        last_line = line_idx + 1;
        for token in line.split_whitespace() {
            if samples.len() == geometry.len() {
                return Err(Error::parse(
                    path,
                    format!("line {last_line}"),
                    format!("more than {} samples", geometry.len()),
                ));
            }
            let v: f64 = token.parse().map_err(|_| {
                Error::parse(path, format!("line {last_line}"), format!("sample '{token}' is not a number"))
            })?;
            let masked = v == nodata || !v.is_finite();
            samples.push(T::from_f64_nearest(if masked { 0.0 } else { v }));
            valid.push(!masked);
        }
    }
    if samples.len() != geometry.len() {
        return Err(Error::parse(
            path,
            format!("line {last_line}"),
            format!("expected {} samples, found {}", geometry.len(), samples.len()),
        ));
    }
    Raster::from_parts(geometry, samples, valid).map_err(|e| Error::parse(path, "samples", e.to_string()))
}
