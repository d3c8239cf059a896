//! Masked single-band and multiband rasters on regular square grids.
//!
//! Validity is a mask, never a sentinel value: a radiance of zero is data.
//! File-format nodata sentinels are converted to mask bits at ingest and
//! back at export. Every operation here preserves the core invariant that
//! a sample flagged valid is finite.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Placement of a `width x height` grid of square pixels in map coordinates.
///
/// `(x_origin, y_origin)` is the outer corner of pixel (0, 0): x grows with
/// columns, y shrinks with rows (north-up convention). The centre of pixel
/// (col, row) is `(x_origin + (col + 0.5) * pixel_size,
/// y_origin - (row + 0.5) * pixel_size)`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct GridGeometry {
    width: usize,
    height: usize,
    x_origin: f64,
    y_origin: f64,
    pixel_size: f64,
}

impl GridGeometry {
    pub fn new(width: usize, height: usize, x_origin: f64, y_origin: f64, pixel_size: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGeometry {
                detail: format!("dimensions {width}x{height} must be positive"),
            });
        }
        if !(pixel_size.is_finite() && pixel_size > 0.0) {
            return Err(Error::InvalidGeometry {
                detail: format!("pixel size {pixel_size} must be finite and positive"),
            });
        }
        if !x_origin.is_finite() || !y_origin.is_finite() {
            return Err(Error::InvalidGeometry {
                detail: "origin coordinates must be finite".to_string(),
            });
        }
        Ok(GridGeometry {
            width,
            height,
            x_origin,
            y_origin,
            pixel_size,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn x_origin(&self) -> f64 {
        self.x_origin
    }

    pub fn y_origin(&self) -> f64 {
        self.y_origin
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    /// Number of pixels in the grid.
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects zero dimensions
    }

    /// Map coordinates of the centre of pixel (col, row).
    pub fn center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.x_origin + (col as f64 + 0.5) * self.pixel_size,
            self.y_origin - (row as f64 + 0.5) * self.pixel_size,
        )
    }

    /// Map extent as (x_min, y_min, x_max, y_max).
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        (
            self.x_origin,
            self.y_origin - self.height as f64 * self.pixel_size,
            self.x_origin + self.width as f64 * self.pixel_size,
            self.y_origin,
        )
    }

    /// Row-major sample index of pixel (col, row).
    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        debug_assert!(col < self.width && row < self.height);
        row * self.width + col
    }
}

/// A single-band raster: row-major samples plus a validity mask.
#[derive(Clone, Debug)]
pub struct Raster<T: Scalar = f64> {
    geometry: GridGeometry,
    samples: Vec<T>,
    valid: Vec<bool>,
}

/// Sample payloads under masked pixels are meaningless and never compared.
impl<T: Scalar> PartialEq for Raster<T> {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry
            && self.valid == other.valid
            && self
                .samples
                .iter()
                .zip(&other.samples)
                .zip(&self.valid)
                .all(|((a, b), &v)| !v || a == b)
    }
}

impl<T: Scalar> Raster<T> {
    /// A raster with every pixel valid and set to `value`.
    pub fn filled(geometry: GridGeometry, value: T) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::OutOfRange {
                what: format!("fill value {value} is not finite"),
            });
        }
        Ok(Raster {
            samples: vec![value; geometry.len()],
            valid: vec![true; geometry.len()],
            geometry,
        })
    }

    /// A raster with every pixel masked.
    pub fn masked(geometry: GridGeometry) -> Self {
        Raster {
            samples: vec![T::default(); geometry.len()],
            valid: vec![false; geometry.len()],
            geometry,
        }
    }

    /// Assemble a raster from parts, checking lengths and that every valid
    /// sample is finite. Samples under masked pixels may hold anything.
    pub fn from_parts(geometry: GridGeometry, samples: Vec<T>, valid: Vec<bool>) -> Result<Self> {
        if samples.len() != geometry.len() || valid.len() != geometry.len() {
            return Err(Error::InvalidGeometry {
                detail: format!(
                    "sample/mask lengths {}/{} do not match grid size {}",
                    samples.len(),
                    valid.len(),
                    geometry.len()
                ),
            });
        }
        if let Some(i) = (0..samples.len()).find(|&i| valid[i] && !samples[i].is_finite()) {
            return Err(Error::OutOfRange {
                what: format!(
                    "valid sample at ({}, {}) is not finite",
                    i % geometry.width(),
                    i / geometry.width()
                ),
            });
        }
        Ok(Raster {
            geometry,
            samples,
            valid,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn is_valid(&self, col: usize, row: usize) -> bool {
        self.valid[self.geometry.index(col, row)]
    }

    /// The sample at (col, row), or None when masked.
    #[inline]
    pub fn get(&self, col: usize, row: usize) -> Option<T> {
        let i = self.geometry.index(col, row);
        self.valid[i].then(|| self.samples[i])
    }

    pub fn set(&mut self, col: usize, row: usize, value: T) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::OutOfRange {
                what: format!("sample {value} at ({col}, {row}) is not finite"),
            });
        }
        let i = self.geometry.index(col, row);
        self.samples[i] = value;
        self.valid[i] = true;
        Ok(())
    }

    pub fn set_masked(&mut self, col: usize, row: usize) {
        let i = self.geometry.index(col, row);
        self.valid[i] = false;
    }

    /// Number of valid pixels.
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Iterate `(col, row, sample)` over valid pixels in row-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let w = self.geometry.width();
        self.samples
            .iter()
            .zip(self.valid.iter())
            .enumerate()
            .filter_map(move |(i, (&s, &v))| v.then_some((i % w, i / w, s)))
    }

    /// Apply `f` to every valid sample, masking results that are not finite.
    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Raster<T> {
        let mut out = Raster::masked(self.geometry);
        for i in 0..self.samples.len() {
            if self.valid[i] {
                let v = f(self.samples[i]);
                if v.is_finite() {
                    out.samples[i] = v;
                    out.valid[i] = true;
                }
            }
        }
        out
    }
}

/// Pixel-wise combination modes for two aligned rasters.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CombineMode {
    Multiply,
    Subtract,
    /// `100 * (a - b) / b`; pixels where `b` is zero become invalid.
    PercentChange,
}

impl fmt::Display for CombineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CombineMode::Multiply => "multiply",
            CombineMode::Subtract => "subtract",
            CombineMode::PercentChange => "percent_change",
        })
    }
}

impl FromStr for CombineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiply" => Ok(CombineMode::Multiply),
            "subtract" => Ok(CombineMode::Subtract),
            "percent_change" => Ok(CombineMode::PercentChange),
            other => Err(Error::OutOfRange {
                what: format!("unknown combine mode '{other}'"),
            }),
        }
    }
}

fn check_aligned(a: &GridGeometry, b: &GridGeometry) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch {
            detail: format!(
                "{}x{} @({}, {}) px {} vs {}x{} @({}, {}) px {}",
                a.width(),
                a.height(),
                a.x_origin(),
                a.y_origin(),
                a.pixel_size(),
                b.width(),
                b.height(),
                b.x_origin(),
                b.y_origin(),
                b.pixel_size()
            ),
        });
    }
    Ok(())
}

/// Combine two aligned rasters pixel-wise. A result pixel is valid only
/// where both inputs are valid and the computed value is finite.
pub fn combine<T: Scalar>(a: &Raster<T>, b: &Raster<T>, mode: CombineMode) -> Result<Raster<T>> {
    check_aligned(a.geometry(), b.geometry())?;
    let hundred = T::from_f64_nearest(100.0);
    let mut out = Raster::masked(*a.geometry());
    for i in 0..a.samples.len() {
        if !(a.valid[i] && b.valid[i]) {
            continue;
        }
        let (av, bv) = (a.samples[i], b.samples[i]);
        let v = match mode {
            CombineMode::Multiply => av * bv,
            CombineMode::Subtract => av - bv,
            CombineMode::PercentChange => {
                if bv == T::zero() {
                    continue;
                }
                hundred * (av - bv) / bv
            }
        };
        if v.is_finite() {
            out.samples[i] = v;
            out.valid[i] = true;
        }
    }
    Ok(out)
}

/// Per-pixel average of a stack of aligned rasters.
///
/// Each output pixel averages the valid inputs at that position; the output
/// mask is the union of the input masks (valid where any input is valid).
pub fn mean_stack<T: Scalar>(inputs: &[Raster<T>]) -> Result<Raster<T>> {
    let first = inputs.first().ok_or_else(|| Error::EmptyInput {
        what: "mean_stack requires at least one raster".to_string(),
    })?;
    for r in &inputs[1..] {
        check_aligned(first.geometry(), r.geometry())?;
    }
    let mut out = Raster::masked(*first.geometry());
    for i in 0..first.samples.len() {
        let mut sum = T::zero();
        let mut count = 0usize;
        for r in inputs {
            if r.valid[i] {
                sum = sum + r.samples[i];
                count += 1;
            }
        }
        if count > 0 {
            let v = sum / T::from_f64_nearest(count as f64);
            if v.is_finite() {
                out.samples[i] = v;
                out.valid[i] = true;
            }
        }
    }
    Ok(out)
}

/// Nearest-neighbour resampling of `src` onto `target` by pixel centre.
///
/// Each output pixel takes the source sample whose centre is nearest its own
/// centre. Membership uses half-open source cells
/// `[x0, x0 + w*s) x (y0 - h*s, y0]`: an output centre exactly on an interior
/// cell edge belongs to the higher column/row index, which equals
/// nearest-centre search with ties resolved toward the larger index. Output
/// pixels whose centre falls outside the source extent, or whose source pixel
/// is masked, are masked. Disjoint extents are an error.
pub fn resample_nearest<T: Scalar>(src: &Raster<T>, target: &GridGeometry) -> Result<Raster<T>> {
    let (sx0, sy0, sx1, sy1) = src.geometry().extent();
    let (tx0, ty0, tx1, ty1) = target.extent();
    if sx1 <= tx0 || tx1 <= sx0 || sy1 <= ty0 || ty1 <= sy0 {
        return Err(Error::NoOverlap);
    }
    let sg = src.geometry();
    let mut out = Raster::masked(*target);
    for row in 0..target.height() {
        let y = target.y_origin() - (row as f64 + 0.5) * target.pixel_size();
        let fy = (sg.y_origin() - y) / sg.pixel_size();
        if fy < 0.0 || fy >= sg.height() as f64 {
            continue;
        }
        let src_row = fy.floor() as usize;
        for col in 0..target.width() {
            let x = target.x_origin() + (col as f64 + 0.5) * target.pixel_size();
            let fx = (x - sg.x_origin()) / sg.pixel_size();
            if fx < 0.0 || fx >= sg.width() as f64 {
                continue;
            }
            let src_col = fx.floor() as usize;
            let si = sg.index(src_col, src_row);
            if src.valid[si] {
                let i = target.index(col, row);
                out.samples[i] = src.samples[si];
                out.valid[i] = true;
            }
        }
    }
    Ok(out)
}

/// The six reflectance bands used for classification, in canonical order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Band {
    Blue,
    Green,
    Red,
    Nir,
    Swir1,
    Swir2,
}

pub const BAND_COUNT: usize = 6;

impl Band {
    pub const ALL: [Band; BAND_COUNT] = [
        Band::Blue,
        Band::Green,
        Band::Red,
        Band::Nir,
        Band::Swir1,
        Band::Swir2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Band::Blue => "blue",
            Band::Green => "green",
            Band::Red => "red",
            Band::Nir => "nir",
            Band::Swir1 => "swir1",
            Band::Swir2 => "swir2",
        }
    }

    pub fn from_name(name: &str) -> Result<Band> {
        Band::ALL
            .into_iter()
            .find(|b| b.name() == name)
            .ok_or_else(|| Error::BandMismatch {
                detail: format!("unknown band name '{name}'"),
            })
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A six-band image: one raster per band, all sharing one geometry.
///
/// Band order is data (it must match the signature table a pixel is
/// classified against); each band appears exactly once.
#[derive(Clone, Debug)]
pub struct MultibandRaster<T: Scalar = f64> {
    geometry: GridGeometry,
    bands: Vec<Band>,
    rasters: Vec<Raster<T>>,
}

impl<T: Scalar> MultibandRaster<T> {
    pub fn new(bands: Vec<Band>, rasters: Vec<Raster<T>>) -> Result<Self> {
        if bands.len() != BAND_COUNT || rasters.len() != BAND_COUNT {
            return Err(Error::BandMismatch {
                detail: format!("expected {BAND_COUNT} bands, got {}", bands.len().max(rasters.len())),
            });
        }
        for b in Band::ALL {
            if !bands.contains(&b) {
                return Err(Error::BandMismatch {
                    detail: format!("band '{b}' missing"),
                });
            }
        }
        let geometry = *rasters[0].geometry();
        for r in &rasters[1..] {
            check_aligned(&geometry, r.geometry())?;
        }
        Ok(MultibandRaster {
            geometry,
            bands,
            rasters,
        })
    }

    /// Construct from rasters already in canonical band order.
    pub fn from_canonical(rasters: Vec<Raster<T>>) -> Result<Self> {
        MultibandRaster::new(Band::ALL.to_vec(), rasters)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn rasters(&self) -> &[Raster<T>] {
        &self.rasters
    }

    pub fn band(&self, band: Band) -> &Raster<T> {
        let i = self.bands.iter().position(|&b| b == band).expect("all bands present");
        &self.rasters[i]
    }

    /// A multiband pixel is valid only if it is valid in every band.
    #[inline]
    pub fn pixel_valid(&self, idx: usize) -> bool {
        self.rasters.iter().all(|r| r.valid[idx])
    }

    /// The pixel's spectrum in this image's band order, or None when any
    /// band is masked there.
    pub fn spectrum(&self, idx: usize) -> Option<[T; BAND_COUNT]> {
        if !self.pixel_valid(idx) {
            return None;
        }
        let mut out = [T::zero(); BAND_COUNT];
        for (slot, r) in out.iter_mut().zip(&self.rasters) {
            *slot = r.samples[idx];
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(w: usize, h: usize, x0: f64, y0: f64, ps: f64) -> GridGeometry {
        GridGeometry::new(w, h, x0, y0, ps).unwrap()
    }

    fn raster_from(geometry: GridGeometry, values: &[Option<f64>]) -> Raster {
        let samples: Vec<f64> = values.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        let valid: Vec<bool> = values.iter().map(|v| v.is_some()).collect();
        Raster::from_parts(geometry, samples, valid).unwrap()
    }

    #[test]
    fn geometry_rejects_degenerate_grids() {
        assert!(GridGeometry::new(0, 4, 0.0, 0.0, 1.0).is_err());
        assert!(GridGeometry::new(4, 0, 0.0, 0.0, 1.0).is_err());
        assert!(GridGeometry::new(4, 4, 0.0, 0.0, 0.0).is_err());
        assert!(GridGeometry::new(4, 4, 0.0, 0.0, -2.0).is_err());
        assert!(GridGeometry::new(4, 4, f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn pixel_centers_follow_north_up_convention() {
        let g = geom(4, 3, 100.0, 200.0, 10.0);
        assert_eq!(g.center(0, 0), (105.0, 195.0));
        assert_eq!(g.center(3, 2), (135.0, 175.0));
        assert_eq!(g.extent(), (100.0, 170.0, 140.0, 200.0));
    }

    #[test]
    fn from_parts_rejects_nonfinite_valid_samples() {
        let g = geom(2, 1, 0.0, 2.0, 1.0);
        let err = Raster::from_parts(g, vec![1.0, f64::NAN], vec![true, true]);
        assert!(err.is_err());
        // NaN under a masked pixel is allowed.
        assert!(Raster::from_parts(g, vec![1.0, f64::NAN], vec![true, false]).is_ok());
    }

    #[test]
    fn combine_multiply_masks_follow_both_inputs() {
        let g = geom(2, 2, 0.0, 2.0, 1.0);
        let a = raster_from(g, &[Some(2.0), Some(3.0), None, Some(5.0)]);
        let b = raster_from(g, &[Some(10.0), None, Some(7.0), Some(0.5)]);
        let out = combine(&a, &b, CombineMode::Multiply).unwrap();
        assert_eq!(out.get(0, 0), Some(20.0));
        assert_eq!(out.get(1, 0), None);
        assert_eq!(out.get(0, 1), None);
        assert_eq!(out.get(1, 1), Some(2.5));
    }

    #[test]
    fn combine_percent_change_triples() {
        // (150, 100) -> +50; (50, 100) -> -50; (x, 0) -> invalid.
        let g = geom(3, 1, 0.0, 1.0, 1.0);
        let a = raster_from(g, &[Some(150.0), Some(50.0), Some(9.0)]);
        let b = raster_from(g, &[Some(100.0), Some(100.0), Some(0.0)]);
        let out = combine(&a, &b, CombineMode::PercentChange).unwrap();
        assert_eq!(out.get(0, 0), Some(50.0));
        assert_eq!(out.get(1, 0), Some(-50.0));
        assert_eq!(out.get(2, 0), None);
    }

    #[test]
    fn combine_subtract_and_alignment_error() {
        let g = geom(1, 1, 0.0, 1.0, 1.0);
        let a = raster_from(g, &[Some(7.0)]);
        let b = raster_from(g, &[Some(2.0)]);
        assert_eq!(combine(&a, &b, CombineMode::Subtract).unwrap().get(0, 0), Some(5.0));

        let shifted = raster_from(geom(1, 1, 5.0, 1.0, 1.0), &[Some(2.0)]);
        assert!(matches!(
            combine(&a, &shifted, CombineMode::Subtract),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn mean_stack_counts_valid_inputs_per_pixel() {
        // {1, masked} and {3, 5} -> {2, 5}: each pixel averages what is valid there.
        let g = geom(2, 1, 0.0, 1.0, 1.0);
        let a = raster_from(g, &[Some(1.0), None]);
        let b = raster_from(g, &[Some(3.0), Some(5.0)]);
        let out = mean_stack(&[a, b]).unwrap();
        assert_eq!(out.get(0, 0), Some(2.0));
        assert_eq!(out.get(1, 0), Some(5.0));
    }

    #[test]
    fn mean_stack_rejects_empty_input() {
        let empty: [Raster; 0] = [];
        assert!(matches!(mean_stack(&empty), Err(Error::EmptyInput { .. })));
    }

    #[test]
    fn mean_stack_matches_per_pixel_oracle_on_random_stacks() {
        // Oracle: direct per-pixel accumulation in the same order.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let g = geom(8, 8, 0.0, 8.0, 1.0);
        for _ in 0..10 {
            let stack: Vec<Raster> = (0..3)
                .map(|_| {
                    let vals: Vec<Option<f64>> = (0..64)
                        .map(|_| {
                            let r = next();
                            (r % 4 != 0).then_some((r % 1000) as f64 / 8.0)
                        })
                        .collect();
                    raster_from(g, &vals)
                })
                .collect();
            let out = mean_stack(&stack).unwrap();
            for i in 0..64 {
                let mut sum = 0.0;
                let mut n = 0usize;
                for r in &stack {
                    if r.validity()[i] {
                        sum += r.samples()[i];
                        n += 1;
                    }
                }
                let (c, r) = (i % 8, i / 8);
                if n == 0 {
                    assert_eq!(out.get(c, r), None);
                } else {
                    assert_eq!(out.get(c, r), Some(sum / n as f64), "pixel {i}");
                }
            }
        }
    }

    /// Brute-force nearest-centre oracle: scan all source pixels, keep the
    /// smallest squared distance, resolve ties toward the larger index by
    /// scanning in row-major order with `<=`. Centres outside the half-open
    /// source extent are outside the grid.
    fn resample_oracle(src: &Raster, target: &GridGeometry) -> Vec<Option<f64>> {
        let sg = src.geometry();
        let (sx0, sy0, sx1, sy1) = sg.extent();
        let mut out = Vec::with_capacity(target.len());
        for row in 0..target.height() {
            for col in 0..target.width() {
                let (x, y) = target.center(col, row);
                if !(x >= sx0 && x < sx1 && y > sy0 && y <= sy1) {
                    out.push(None);
                    continue;
                }
                let mut best = f64::INFINITY;
                let mut best_px = (0usize, 0usize);
                for sr in 0..sg.height() {
                    for sc in 0..sg.width() {
                        let (cx, cy) = sg.center(sc, sr);
                        let d = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                        if d <= best {
                            best = d;
                            best_px = (sc, sr);
                        }
                    }
                }
                out.push(src.get(best_px.0, best_px.1));
            }
        }
        out
    }

    #[test]
    fn resample_doubles_checkerboard_into_blocks() {
        // 2x2 checkerboard at 2m pixels onto a 4x4 grid at 1m: each source
        // pixel block-replicates into 2x2 output pixels.
        let src_g = geom(2, 2, 0.0, 4.0, 2.0);
        let src = raster_from(src_g, &[Some(0.0), Some(1.0), Some(1.0), Some(0.0)]);
        let tgt = geom(4, 4, 0.0, 4.0, 1.0);
        let out = resample_nearest(&src, &tgt).unwrap();
        let expect = [
            0.0, 0.0, 1.0, 1.0,
            0.0, 0.0, 1.0, 1.0,
            1.0, 1.0, 0.0, 0.0,
            1.0, 1.0, 0.0, 0.0,
        ];
        for (i, &e) in expect.iter().enumerate() {
            assert_eq!(out.get(i % 4, i / 4), Some(e), "pixel {i}");
        }
        // And the brute-force oracle agrees everywhere.
        let oracle = resample_oracle(&src, &tgt);
        for (i, e) in oracle.iter().enumerate() {
            assert_eq!(out.get(i % 4, i / 4), *e);
        }
    }

    #[test]
    fn resample_matches_oracle_on_random_offset_grids() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        // Power-of-two pixel sizes and integer origins keep edge arithmetic
        // exact, so tie pixels genuinely exercise the ownership rule.
        for round in 0..20 {
            let sw = 2 + (next() % 6) as usize;
            let sh = 2 + (next() % 6) as usize;
            let sps = [0.5, 1.0, 2.0, 4.0][(next() % 4) as usize];
            let sx0 = (next() % 8) as f64 - 4.0;
            let sy0 = (next() % 8) as f64;
            let sg = geom(sw, sh, sx0, sy0, sps);
            let vals: Vec<Option<f64>> = (0..sg.len())
                .map(|_| (next() % 5 != 0).then_some((next() % 100) as f64))
                .collect();
            let src = raster_from(sg, &vals);

            let tw = 2 + (next() % 8) as usize;
            let th = 2 + (next() % 8) as usize;
            let tps = [0.5, 1.0, 2.0][(next() % 3) as usize];
            let tg = geom(tw, th, sx0 - 1.0 + (next() % 4) as f64, sy0 + 1.0 - (next() % 4) as f64, tps);

            let (ax0, ay0, ax1, ay1) = sg.extent();
            let (bx0, by0, bx1, by1) = tg.extent();
            let disjoint = ax1 <= bx0 || bx1 <= ax0 || ay1 <= by0 || by1 <= ay0;
            match resample_nearest(&src, &tg) {
                Err(Error::NoOverlap) => assert!(disjoint, "round {round}: spurious overlap error"),
                Err(e) => panic!("round {round}: {e}"),
                Ok(out) => {
                    assert!(!disjoint);
                    let oracle = resample_oracle(&src, &tg);
                    for (i, e) in oracle.iter().enumerate() {
                        assert_eq!(out.get(i % tw, i / tw), *e, "round {round} pixel {i}");
                    }
                }
            }
        }
    }

    #[test]
    fn resample_identity_on_same_geometry() {
        let g = geom(3, 3, 10.0, 20.0, 2.0);
        let vals: Vec<Option<f64>> = (0..9).map(|i| (i != 4).then_some(i as f64)).collect();
        let src = raster_from(g, &vals);
        let out = resample_nearest(&src, &g).unwrap();
        assert_eq!(out, src);
    }

    #[test]
    fn resample_disjoint_extents_error() {
        let src = raster_from(geom(2, 2, 0.0, 2.0, 1.0), &[Some(1.0); 4]);
        let tgt = geom(2, 2, 100.0, 2.0, 1.0);
        assert!(matches!(resample_nearest(&src, &tgt), Err(Error::NoOverlap)));
        // Extents that merely touch along an edge share no pixel centres.
        let touching = geom(2, 2, 2.0, 2.0, 1.0);
        assert!(matches!(resample_nearest(&src, &touching), Err(Error::NoOverlap)));
    }

    #[test]
    fn multiband_requires_all_six_bands_aligned() {
        let g = geom(2, 2, 0.0, 2.0, 1.0);
        let mk = || Raster::filled(g, 1.0).unwrap();
        assert!(MultibandRaster::from_canonical(vec![mk(); 6]).is_ok());
        assert!(MultibandRaster::from_canonical(vec![mk(); 5]).is_err());

        let mut dup = Band::ALL.to_vec();
        dup[5] = Band::Blue;
        assert!(MultibandRaster::new(dup, vec![mk(); 6]).is_err());

        let mut rasters = vec![mk(); 6];
        rasters[3] = Raster::filled(geom(2, 3, 0.0, 3.0, 1.0), 1.0).unwrap();
        assert!(MultibandRaster::from_canonical(rasters).is_err());
    }

    #[test]
    fn multiband_pixel_validity_is_all_bands() {
        let g = geom(2, 1, 0.0, 1.0, 1.0);
        let mut rasters: Vec<Raster> = (0..6).map(|b| Raster::filled(g, b as f64).unwrap()).collect();
        rasters[2].set_masked(1, 0);
        let img = MultibandRaster::from_canonical(rasters).unwrap();
        assert!(img.pixel_valid(0));
        assert!(!img.pixel_valid(1));
        assert_eq!(img.spectrum(0), Some([0.0, 1.0, 2.0, 3.0, 4.0, 5.0]));
        assert_eq!(img.spectrum(1), None);
    }

    #[test]
    fn band_names_round_trip() {
        for b in Band::ALL {
            assert_eq!(Band::from_name(b.name()).unwrap(), b);
        }
        assert!(Band::from_name("thermal").is_err());
    }

    #[test]
    fn generic_scalar_ops_work_at_f32() {
        let g = geom(2, 1, 0.0, 1.0, 1.0);
        let a = Raster::<f32>::filled(g, 4.0).unwrap();
        let b = Raster::<f32>::filled(g, 2.0).unwrap();
        let m = combine(&a, &b, CombineMode::Multiply).unwrap();
        assert_eq!(m.get(0, 0), Some(8.0f32));
        let s = mean_stack(&[a, b]).unwrap();
        assert_eq!(s.get(1, 0), Some(3.0f32));
    }
}
