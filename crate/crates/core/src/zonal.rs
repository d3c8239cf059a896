//! Zonal statistics over census-tract polygons.
//!
//! Tracts are rasterized once per grid with an even-odd scanline rule, then
//! per-month statistics are computed over each tract's pixel footprint.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::tracts::{csv_error, TractCollection, TractPolygon};
use crate::month::MonthKey;
use crate::raster::{GridGeometry, Raster};
use crate::scalar::Scalar;

/// Pixels of one tract on a specific grid, row-major.
#[derive(Clone, Debug)]
pub struct PixelFootprint {
    tract_id: String,
    geometry: GridGeometry,
    pixels: Vec<(usize, usize)>,
}

impl PixelFootprint {
    pub fn tract_id(&self) -> &str {
        &self.tract_id
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// (col, row) pairs in row-major order.
    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// X coordinates where ring edges cross the horizontal line at `y`.
///
/// An edge (p, q) crosses iff `(p.y > y) != (q.y > y)`; the crossing is at
/// `p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y)`. Keeping this expression
/// identical everywhere makes point-in-polygon tests bit-reproducible.
fn row_crossings(tract: &TractPolygon, y: f64, out: &mut Vec<f64>) {
    out.clear();
    for ring in &tract.rings {
        let n = ring.len();
        for i in 0..n {
            let p = ring[i];
            let q = ring[(i + 1) % n];
            if (p.1 > y) != (q.1 > y) {
                out.push(p.0 + (y - p.1) * (q.0 - p.0) / (q.1 - p.1));
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("crossings are finite"));
}

/// A pixel center is inside iff an odd number of crossings lie strictly
/// to its right.
fn center_inside(crossings: &[f64], x: f64) -> bool {
    let not_greater = crossings.partition_point(|&c| c <= x);
    (crossings.len() - not_greater) % 2 == 1
}

/// Rasterize one tract onto a grid: every pixel whose center is inside the
/// polygon (holes excluded by even-odd parity), clipped to the grid.
pub fn rasterize_tract(tract: &TractPolygon, geometry: &GridGeometry) -> PixelFootprint {
    let ps = geometry.pixel_size();
    let mut pixels = Vec::new();
    let mut crossings = Vec::new();
    for row in 0..geometry.height() {
        let y = geometry.y_origin() - (row as f64 + 0.5) * ps;
        row_crossings(tract, y, &mut crossings);
        if crossings.is_empty() {
            continue;
        }
        // Centers left of every crossing see an even count, centers right of
        // every crossing see zero; only the span between can be inside.
        let lo = (crossings[0] - geometry.x_origin()) / ps - 0.5;
        let hi = (crossings[crossings.len() - 1] - geometry.x_origin()) / ps - 0.5;
        let col_lo = lo.floor().max(0.0) as usize;
        let col_hi = (hi.ceil() as isize).min(geometry.width() as isize - 1);
        let mut col = col_lo as isize;
        while col <= col_hi {
            let x = geometry.x_origin() + (col as f64 + 0.5) * ps;
            if center_inside(&crossings, x) {
                pixels.push((col as usize, row));
            }
            col += 1;
        }
    }
    PixelFootprint {
        tract_id: tract.tract_id.clone(),
        geometry: *geometry,
        pixels,
    }
}

/// Rasterize every tract in a collection, in collection order.
pub fn rasterize_tracts(tracts: &TractCollection, geometry: &GridGeometry) -> Vec<PixelFootprint> {
    tracts.iter().map(|t| rasterize_tract(t, geometry)).collect()
}

/// Summary statistics over the valid pixels of one footprint.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct ZonalStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

/// One tract-month row; `stats` is None when no valid pixel was seen.
#[derive(Clone, PartialEq, Debug)]
pub struct ZonalRecord {
    pub tract_id: String,
    pub month: MonthKey,
    pub stats: Option<ZonalStats>,
    pub valid_count: u64,
    pub total_count: u64,
}

/// Two-pass statistics over a footprint on one raster.
///
/// The footprint must belong to the raster's grid; a stale footprint from
/// another geometry is rejected rather than silently misread.
pub fn zonal_stats<T: Scalar>(
    raster: &Raster<T>,
    footprint: &PixelFootprint,
    month: MonthKey,
) -> Result<ZonalRecord> {
    if footprint.geometry() != raster.geometry() {
        return Err(Error::GeometryDrift {
            tract_id: footprint.tract_id.clone(),
        });
    }
    let mut sum = 0.0f64;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut valid = 0u64;
    for &(col, row) in &footprint.pixels {
        if let Some(v) = raster.get(col, row) {
            let v = v.as_f64();
            sum += v;
            min = min.min(v);
            max = max.max(v);
            valid += 1;
        }
    }
    let stats = if valid > 0 {
        let mean = (sum / valid as f64).clamp(min, max);
        let mut sq = 0.0f64;
        for &(col, row) in &footprint.pixels {
            if let Some(v) = raster.get(col, row) {
                let d = v.as_f64() - mean;
                sq += d * d;
            }
        }
        Some(ZonalStats {
            mean,
            std_dev: (sq / valid as f64).sqrt(),
            min,
            max,
        })
    } else {
        None
    };
    Ok(ZonalRecord {
        tract_id: footprint.tract_id.clone(),
        month,
        stats,
        valid_count: valid,
        total_count: footprint.pixels.len() as u64,
    })
}

/// Per-tract monthly mean series, strictly increasing in month.
#[derive(Clone, Debug)]
pub struct ZonalSeries {
    tract_id: String,
    points: Vec<(MonthKey, f64)>,
}

impl ZonalSeries {
    pub fn new(tract_id: String, points: Vec<(MonthKey, f64)>) -> Result<Self> {
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Tract {
                    tract_id: tract_id.clone(),
                    detail: format!("months not strictly increasing at {}", pair[1].0),
                });
            }
        }
        Ok(ZonalSeries { tract_id, points })
    }

    pub fn tract_id(&self) -> &str {
        &self.tract_id
    }

    pub fn points(&self) -> &[(MonthKey, f64)] {
        &self.points
    }

    pub fn value_at(&self, month: MonthKey) -> Option<f64> {
        self.points
            .binary_search_by_key(&month, |&(m, _)| m)
            .ok()
            .map(|i| self.points[i].1)
    }
}

/// Group records into per-tract mean series, sorted by tract id.
///
/// Records without statistics (no valid pixel that month) are dropped;
/// duplicate tract-months are an error.
pub fn series_from_records(records: &[ZonalRecord]) -> Result<Vec<ZonalSeries>> {
    let mut grouped: BTreeMap<&str, Vec<(MonthKey, f64)>> = BTreeMap::new();
    for rec in records {
        if let Some(stats) = &rec.stats {
            grouped.entry(&rec.tract_id).or_default().push((rec.month, stats.mean));
        }
    }
    let mut out = Vec::with_capacity(grouped.len());
    for (tract_id, mut points) in grouped {
        points.sort_by_key(|&(m, _)| m);
        for pair in points.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Tract {
                    tract_id: tract_id.to_string(),
                    detail: format!("duplicate month {}", pair[0].0),
                });
            }
        }
        out.push(ZonalSeries::new(tract_id.to_string(), points)?);
    }
    Ok(out)
}

/// Write records as CSV sorted by (tract_id, year, month). Rows without
/// statistics keep their counts and leave the four value fields empty.
pub fn write_zonal_csv(records: &[ZonalRecord], path: &Path) -> Result<()> {
    let mut sorted: Vec<&ZonalRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (&a.tract_id, a.month).cmp(&(&b.tract_id, b.month)));
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record([
        "tract_id",
        "year",
        "month",
        "mean",
        "std",
        "min",
        "max",
        "valid_count",
        "total_count",
    ])
    .map_err(|e| csv_error(path, e))?;
    for rec in sorted {
        let (mean, std, min, max) = match &rec.stats {
            Some(s) => (
                s.mean.to_string(),
                s.std_dev.to_string(),
                s.min.to_string(),
                s.max.to_string(),
            ),
            None => Default::default(),
        };
        w.write_record([
            rec.tract_id.as_str(),
            &rec.month.year().to_string(),
            &rec.month.month().to_string(),
            &mean,
            &std,
            &min,
            &max,
            &rec.valid_count.to_string(),
            &rec.total_count.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read records written by [`write_zonal_csv`].
pub fn read_zonal_csv(path: &Path) -> Result<Vec<ZonalRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = [
        "tract_id",
        "year",
        "month",
        "mean",
        "std",
        "min",
        "max",
        "valid_count",
        "total_count",
    ];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::parse(path, "line 1", format!("unexpected header {headers:?}")));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let loc = format!("line {line}");
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| Error::parse(path, loc.clone(), format!("bad number '{}'", field(i))))
        };
        let year: i32 = field(1)
            .parse()
            .map_err(|_| Error::parse(path, loc.clone(), format!("bad year '{}'", field(1))))?;
        let month_no: u32 = field(2)
            .parse()
            .map_err(|_| Error::parse(path, loc.clone(), format!("bad month '{}'", field(2))))?;
        let month = MonthKey::new(year, month_no)
            .map_err(|e| Error::parse(path, loc.clone(), e.to_string()))?;
        let value_fields = [field(3), field(4), field(5), field(6)];
        let empties = value_fields.iter().filter(|f| f.is_empty()).count();
        let stats = match empties {
            0 => Some(ZonalStats {
                mean: num(3)?,
                std_dev: num(4)?,
                min: num(5)?,
                max: num(6)?,
            }),
            4 => None,
            _ => {
                return Err(Error::parse(
                    path,
                    loc,
                    "statistics fields must be all present or all empty",
                ))
            }
        };
        let valid_count: u64 = field(7)
            .parse()
            .map_err(|_| Error::parse(path, loc.clone(), format!("bad valid_count '{}'", field(7))))?;
        let total_count: u64 = field(8)
            .parse()
            .map_err(|_| Error::parse(path, loc.clone(), format!("bad total_count '{}'", field(8))))?;
        if stats.is_some() != (valid_count > 0) {
            return Err(Error::parse(path, loc, "valid_count inconsistent with statistics"));
        }
        out.push(ZonalRecord {
            tract_id: field(0).to_string(),
            month,
            stats,
            valid_count,
            total_count,
        });
    }
    Ok(out)
}
