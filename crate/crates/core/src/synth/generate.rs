//! Scenario generation and the ground-truth manifest.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::classify::reclassify_percent;
use crate::error::{Error, Result};
use crate::io::tracts::csv_error;
use crate::io::{self, write_census_csv, write_tracts, TractCollection, TractPolygon};
use crate::month::MonthKey;
use crate::raster::{GridGeometry, MultibandRaster, Raster, BAND_COUNT};
use crate::synth::ScenarioConfig;

/// Observation counts are drawn uniformly from 1..=15 on clear months.
pub const MAX_OBSERVATIONS: u32 = 15;

/// Per-band reflectance ceiling; class c maps to (c/10) of this.
const BAND_LEVELS: [f64; BAND_COUNT] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8];

// Independent generator streams per component, so adding draws to
// one component never shifts another's sequence.
const STREAM_REFERENCE: u64 = 0;
const STREAM_SPECTRAL: u64 = 1;
const STREAM_LANDSAT_CLOUDS: u64 = 2;
const STREAM_BRIGHTNESS: u64 = 3;
const STREAM_VIIRS: u64 = 4;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// What the generator knows to be true, per tract and month.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthRow {
    pub tract_id: String,
    pub month: MonthKey,
    /// Expected tract-mean index value before noise and masking.
    pub true_brightness: f64,
    pub outage_fraction: f64,
    pub persons_out: f64,
    pub buildings_lost: f64,
}

/// Island totals for one month, summed over the per-tract rows.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct IslandTruth {
    pub persons_out: f64,
    pub buildings_lost: f64,
}

/// The manifest: per-tract rows plus the census denominators.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    rows: Vec<TruthRow>,
    total_population: u64,
    total_buildings: u64,
}

impl GroundTruth {
    /// Rows sorted by (tract_id, month).
    pub fn rows(&self) -> &[TruthRow] {
        &self.rows
    }

    pub fn total_population(&self) -> u64 {
        self.total_population
    }

    pub fn total_buildings(&self) -> u64 {
        self.total_buildings
    }

    /// Monthly island aggregates, summed from the per-tract rows.
    pub fn island(&self) -> BTreeMap<MonthKey, IslandTruth> {
        let mut out: BTreeMap<MonthKey, IslandTruth> = BTreeMap::new();
        for row in &self.rows {
            let agg = out.entry(row.month).or_default();
            agg.persons_out += row.persons_out;
            agg.buildings_lost += row.buildings_lost;
        }
        out
    }

    /// Write the manifest CSV
    /// `tract_id,year,month,true_brightness,outage_fraction,persons_out,buildings_lost`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record([
            "tract_id",
            "year",
            "month",
            "true_brightness",
            "outage_fraction",
            "persons_out",
            "buildings_lost",
        ])
        .map_err(|e| csv_error(path, e))?;
        for row in &self.rows {
            w.write_record([
                row.tract_id.as_str(),
                &row.month.year().to_string(),
                &row.month.month().to_string(),
                &row.true_brightness.to_string(),
                &row.outage_fraction.to_string(),
                &row.persons_out.to_string(),
                &row.buildings_lost.to_string(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Read manifest rows written by [`GroundTruth::write_csv`].
pub fn read_manifest_csv(path: &Path) -> Result<Vec<TruthRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = [
        "tract_id",
        "year",
        "month",
        "true_brightness",
        "outage_fraction",
        "persons_out",
        "buildings_lost",
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
        macro_rules! parse_field {
            ($i:expr, $ty:ty) => {
                field($i).parse::<$ty>().map_err(|_| {
                    Error::parse(path, loc.clone(), format!("bad value '{}'", field($i)))
                })?
            };
        }
        let month = MonthKey::new(parse_field!(1, i32), parse_field!(2, u32))
            .map_err(|e| Error::parse(path, loc.clone(), e.to_string()))?;
        out.push(TruthRow {
            tract_id: field(0).to_string(),
            month,
            true_brightness: parse_field!(3, f64),
            outage_fraction: parse_field!(4, f64),
            persons_out: parse_field!(5, f64),
            buildings_lost: parse_field!(6, f64),
        });
    }
    Ok(out)
}

/// Tessellation cut positions: `parts + 1` strictly increasing indices
/// from 0 to `extent`, as evenly spaced as integer rounding allows.
fn cuts(extent: usize, parts: usize) -> Vec<usize> {
    (0..=parts)
        .map(|i| ((i * extent) as f64 / parts as f64).round() as usize)
        .collect()
}

/// Index lookup: for each cell, which part of the tessellation holds it.
fn part_lookup(cut: &[usize]) -> Vec<usize> {
    let mut lookup = Vec::with_capacity(*cut.last().unwrap());
    for part in 0..cut.len() - 1 {
        for _ in cut[part]..cut[part + 1] {
            lookup.push(part);
        }
    }
    lookup
}

/// Generate a scenario into a directory and return its ground truth.
///
/// Outputs: `reference_percent.rbin`, `landsat_<epoch>_<band>.rbin` per
/// epoch, `viirs_YYYY_MM_{rad,obs}.rbin` per month, `tracts.geojson`,
/// `census.csv`, and `manifest.csv`. Identical configurations produce
/// byte-identical files.
pub fn generate(config: &ScenarioConfig, out_dir: &Path) -> Result<GroundTruth> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let (w, h) = (config.landsat_width, config.landsat_height);
    let scale = config.viirs_scale;
    let (vw, vh) = (w / scale, h / scale);
    let ps = config.landsat_pixel_size;
    let landsat_geom = GridGeometry::new(w, h, config.landsat_x_origin, config.y_origin(), ps)?;
    let viirs_geom = GridGeometry::new(vw, vh, config.landsat_x_origin, config.y_origin(), ps * scale as f64)?;

    // Reference percent map. Values are quantized through the stored
    // 32-bit width immediately, so in-memory truth equals the file.
    let mut rng = stream_rng(config.seed, STREAM_REFERENCE);
    let mut percent = Raster::masked(landsat_geom);
    for row in 0..h {
        for col in 0..w {
            let v = (rng.random::<f64>() * 100.0) as f32 as f64;
            percent.set(col, row, v)?;
        }
    }
    io::write_raster(&percent, &out_dir.join("reference_percent.rbin"))?;
    let classes = reclassify_percent(&percent)?;
    let class_of = |col: usize, row: usize| -> f64 {
        classes.raster().get(col, row).expect("reference map is fully valid")
    };

    // Multiband imagery: spectra are class levels plus optional noise,
    // with optional per-pixel epoch cloud masking.
    let mut spectral_rng = stream_rng(config.seed, STREAM_SPECTRAL);
    let mut cloud_rng = stream_rng(config.seed, STREAM_LANDSAT_CLOUDS);
    for epoch in 1..=config.landsat_epochs {
        let mut bands: Vec<Raster<f64>> = (0..BAND_COUNT).map(|_| Raster::masked(landsat_geom)).collect();
        for row in 0..h {
            for col in 0..w {
                let class = class_of(col, row);
                let clouded = cloud_rng.random::<f64>() < config.landsat_cloud_probability;
                for (b, raster) in bands.iter_mut().enumerate() {
                    let z: f64 = spectral_rng.sample(StandardNormal);
                    if !clouded {
                        let value = (class / 10.0) * BAND_LEVELS[b] + config.spectral_noise_sigma * z;
                        raster.set(col, row, value)?;
                    }
                }
            }
        }
        let image = MultibandRaster::from_canonical(bands)?;
        io::write_multiband(&image, &out_dir.join(format!("landsat_{epoch:02}")))?;
    }

    // Rectangular tracts aligned to brightness-pixel boundaries, so every
    // brightness pixel and every imagery pixel sits in exactly one tract.
    let col_cuts = cuts(vw, config.tract_cols);
    let row_cuts = cuts(vh, config.tract_rows);
    let col_part = part_lookup(&col_cuts);
    let row_part = part_lookup(&row_cuts);
    let tract_count = config.tract_count();
    let cycled = |list: &[u64], k: usize| list[k % list.len()];
    let mut polygons = Vec::with_capacity(tract_count);
    for tr in 0..config.tract_rows {
        for tc in 0..config.tract_cols {
            let k = tr * config.tract_cols + tc;
            let cell = ps * scale as f64;
            let x_lo = viirs_geom.x_origin() + col_cuts[tc] as f64 * cell;
            let x_hi = viirs_geom.x_origin() + col_cuts[tc + 1] as f64 * cell;
            let y_hi = viirs_geom.y_origin() - row_cuts[tr] as f64 * cell;
            let y_lo = viirs_geom.y_origin() - row_cuts[tr + 1] as f64 * cell;
            polygons.push(TractPolygon::new(
                (config.tract_id_base + k as u64).to_string(),
                cycled(&config.tract_populations, k),
                cycled(&config.tract_buildings, k),
                vec![vec![(x_lo, y_lo), (x_hi, y_lo), (x_hi, y_hi), (x_lo, y_hi)]],
            )?);
        }
    }
    let tracts = TractCollection::new(polygons)?;
    write_tracts(&tracts, &out_dir.join("tracts.geojson"))?;
    write_census_csv(&tracts, &out_dir.join("census.csv"))?;

    // Impervious weight of each brightness pixel: the class under its
    // center, on the 1..10 scale mapped to 0.1..1.0.
    let mut weight = vec![0.0f64; vw * vh];
    let mut tract_of = vec![0usize; vw * vh];
    for vrow in 0..vh {
        for vcol in 0..vw {
            let lcol = vcol * scale + scale / 2;
            let lrow = vrow * scale + scale / 2;
            weight[vrow * vw + vcol] = class_of(lcol, lrow) / 10.0;
            tract_of[vrow * vw + vcol] = row_part[vrow] * config.tract_cols + col_part[vcol];
        }
    }

    // Per-tract brightness model and outage curve.
    let start = config.months.start();
    let onset_idx = config.storm_onset.index_from(start);
    let base_of = |k: usize| config.brightness_base[k % config.brightness_base.len()];
    let outage_of = |k: usize| config.storm_outage[k % config.storm_outage.len()];
    let model_value = |k: usize, m: MonthKey| -> f64 {
        base_of(k)
            + config.brightness_slope * m.index_from(start) as f64
            + config.brightness_seasonal[m.month() as usize - 1]
    };
    let outage_value = |k: usize, m: MonthKey| -> f64 {
        let since = m.index_from(start) - onset_idx;
        if since < 0 {
            0.0
        } else {
            outage_of(k) * (1.0 - config.storm_recovery_rate).powi(since as i32)
        }
    };

    // Monthly radiance and observation-count pairs.
    let mut brightness_rng = stream_rng(config.seed, STREAM_BRIGHTNESS);
    let mut viirs_rng = stream_rng(config.seed, STREAM_VIIRS);
    for month in config.months.iter() {
        let model: Vec<f64> = (0..tract_count).map(|k| model_value(k, month)).collect();
        let outage: Vec<f64> = (0..tract_count).map(|k| outage_value(k, month)).collect();
        let mut radiance = Raster::masked(viirs_geom);
        let mut observations = Raster::masked(viirs_geom);
        for vrow in 0..vh {
            for vcol in 0..vw {
                let i = vrow * vw + vcol;
                let k = tract_of[i];
                // Both draws happen unconditionally to keep the stream
                // positions independent of the parameter values.
                let z: f64 = brightness_rng.sample(StandardNormal);
                let cloud: f64 = viirs_rng.random();
                let count = viirs_rng.random_range(1..=MAX_OBSERVATIONS);
                let lit = weight[i] * model[k] * (1.0 - outage[k]);
                let value = lit + config.brightness_noise_rel * base_of(k) * z;
                radiance.set(vcol, vrow, value.max(0.0))?;
                let obs = if cloud < config.cloud_probability { 0 } else { count };
                observations.set(vcol, vrow, obs as f64)?;
            }
        }
        io::write_raster(&radiance, &out_dir.join(io::radiance_name(month)))?;
        io::write_raster(&observations, &out_dir.join(io::observations_name(month)))?;
    }

    // Expected tract-mean index: for each tract, the mean over its imagery
    // pixels of class x weight, scaled by the brightness model. This is
    // what zonal statistics of the index recover when noise is off.
    let mut k_sum = vec![0.0f64; tract_count];
    let mut k_count = vec![0u64; tract_count];
    for lrow in 0..h {
        for lcol in 0..w {
            let v = (lrow / scale) * vw + (lcol / scale);
            let k = tract_of[v];
            k_sum[k] += class_of(lcol, lrow) * weight[v];
            k_count[k] += 1;
        }
    }

    let mut rows = Vec::with_capacity(tract_count * config.months.len());
    for (k, tract) in tracts.iter().enumerate() {
        let index_level = k_sum[k] / k_count[k] as f64;
        for month in config.months.iter() {
            let o = outage_value(k, month);
            rows.push(TruthRow {
                tract_id: tract.tract_id.clone(),
                month,
                true_brightness: index_level * model_value(k, month) * (1.0 - o),
                outage_fraction: o,
                persons_out: o * tract.population as f64,
                buildings_lost: o * tract.building_count as f64,
            });
        }
    }
    rows.sort_by(|a, b| (&a.tract_id, a.month).cmp(&(&b.tract_id, b.month)));
    let truth = GroundTruth {
        rows,
        total_population: tracts.total_population(),
        total_buildings: tracts.total_buildings(),
    };
    truth.write_csv(&out_dir.join("manifest.csv"))?;
    Ok(truth)
}
