//! Transfer-learning impervious-surface classification.
//!
//! A percent-impervious reference map is binned into ten classes, per-class
//! spectral signatures are pooled from reference-period imagery, and later
//! images are labelled by nearest signature (1-NN, Euclidean, equal
//! weighting). Per-image maps average into a fractional composite.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::tracts::csv_error;
use crate::raster::{mean_stack, Band, MultibandRaster, Raster, BAND_COUNT};
use crate::scalar::Scalar;

pub const CLASS_COUNT: usize = 10;

/// Whether a map holds integer per-image classes or fractional averages.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MapKind {
    /// Integer classes 1..=10 from a single image.
    PerImage,
    /// Averages of per-image maps; values in [1, 10].
    Composite,
}

/// An impervious-surface class map.
#[derive(Clone, Debug)]
pub struct ImperviousMap<T: Scalar = f64> {
    raster: Raster<T>,
    kind: MapKind,
}

impl<T: Scalar> ImperviousMap<T> {
    /// Validate and wrap a raster as a class map.
    pub fn from_raster(raster: Raster<T>, kind: MapKind) -> Result<Self> {
        let w = raster.geometry().width();
        let (lo, hi) = (T::one(), T::from_f64_nearest(CLASS_COUNT as f64));
        for (i, (&v, &ok)) in raster.samples().iter().zip(raster.validity()).enumerate() {
            if !ok {
                continue;
            }
            let integral = v.fract() == T::zero();
            let in_range = v >= lo && v <= hi;
            let fits = match kind {
                MapKind::PerImage => integral && in_range,
                MapKind::Composite => in_range,
            };
            if !fits {
                return Err(Error::OutOfRange {
                    what: format!(
                        "class value {v} at ({}, {}) invalid for a {} map",
                        i % w,
                        i / w,
                        match kind {
                            MapKind::PerImage => "per-image",
                            MapKind::Composite => "composite",
                        }
                    ),
                });
            }
        }
        Ok(ImperviousMap { raster, kind })
    }

    pub fn raster(&self) -> &Raster<T> {
        &self.raster
    }

    pub fn into_raster(self) -> Raster<T> {
        self.raster
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    /// Integer class at a pixel (rounds composites to the nearest class).
    pub fn class_at(&self, col: usize, row: usize) -> Option<u8> {
        self.raster.get(col, row).map(|v| v.as_f64().round() as u8)
    }
}

/// Bin a 0-100 percent-impervious raster into classes 1..=10.
///
/// Bins are [0,10) -> 1, [10,20) -> 2, ..., [80,90) -> 9, [90,100] -> 10.
/// A valid value outside [0, 100] is an error naming the pixel.
pub fn reclassify_percent<T: Scalar>(reference: &Raster<T>) -> Result<ImperviousMap<T>> {
    let hundred = T::from_f64_nearest(100.0);
    let w = reference.geometry().width();
    let mut out = Raster::masked(*reference.geometry());
    for (i, (&v, &ok)) in reference.samples().iter().zip(reference.validity()).enumerate() {
        if !ok {
            continue;
        }
        if v < T::zero() || v > hundred {
            return Err(Error::OutOfRange {
                what: format!("percent value {v} at ({}, {}) outside [0, 100]", i % w, i / w),
            });
        }
        let class = ((v.as_f64() / 10.0).floor() as usize + 1).min(CLASS_COUNT);
        out.set(i % w, i / w, T::from_f64_nearest(class as f64))?;
    }
    ImperviousMap::from_raster(out, MapKind::PerImage)
}

/// Pooled per-class, per-band spectral means with observation support.
#[derive(Clone, Debug)]
pub struct SignatureTable<T: Scalar = f64> {
    bands: [Band; BAND_COUNT],
    /// `means[class - 1][band_slot]`, meaningful only where support > 0.
    means: [[T; BAND_COUNT]; CLASS_COUNT],
    /// Pixel-observation count per class.
    support: [u64; CLASS_COUNT],
}

impl<T: Scalar> SignatureTable<T> {
    pub fn bands(&self) -> &[Band; BAND_COUNT] {
        &self.bands
    }

    pub fn support(&self, class: u8) -> u64 {
        self.support[class as usize - 1]
    }

    /// Mean spectrum of a class in this table's band order, None if absent.
    pub fn signature(&self, class: u8) -> Option<&[T; BAND_COUNT]> {
        (self.support[class as usize - 1] > 0).then(|| &self.means[class as usize - 1])
    }

    /// Classes with at least one observation, ascending.
    pub fn present_classes(&self) -> Vec<u8> {
        (1..=CLASS_COUNT as u8).filter(|&c| self.support(c) > 0).collect()
    }

    /// Write as CSV `class,band,mean,support`: one row per (class, band) for
    /// all ten classes, mean left empty where the class is absent.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["class", "band", "mean", "support"])
            .map_err(|e| csv_error(path, e))?;
        for class in 1..=CLASS_COUNT {
            for (slot, band) in self.bands.iter().enumerate() {
                let support = self.support[class - 1];
                let mean = if support > 0 {
                    self.means[class - 1][slot].as_f64().to_string()
                } else {
                    String::new()
                };
                w.write_record([&class.to_string(), band.name(), &mean, &support.to_string()])
                    .map_err(|e| csv_error(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Read a table written by [`SignatureTable::write_csv`]. Band order is
    /// taken from the rows of class 1 and must repeat for every class.
    pub fn read_csv(path: &Path) -> Result<SignatureTable<T>> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["class", "band", "mean", "support"] {
            return Err(Error::parse(path, "line 1", format!("unexpected header {headers:?}")));
        }

        let mut bands: Vec<Band> = Vec::new();
        let mut means = [[T::zero(); BAND_COUNT]; CLASS_COUNT];
        let mut support = [0u64; CLASS_COUNT];
        let mut row_count = 0usize;
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let loc = format!("line {line}");
            let field = |i: usize| record.get(i).unwrap_or("");

            let class: usize = field(0)
                .parse()
                .map_err(|_| Error::parse(path, loc.clone(), format!("bad class '{}'", field(0))))?;
            let expected_class = row_count / BAND_COUNT + 1;
            if class != expected_class {
                return Err(Error::parse(
                    path,
                    loc,
                    format!("expected class {expected_class} here, found {class}"),
                ));
            }
            let band = Band::from_name(field(1))
                .map_err(|_| Error::parse(path, loc.clone(), format!("bad band '{}'", field(1))))?;
            let sup: u64 = field(3)
                .parse()
                .map_err(|_| Error::parse(path, loc.clone(), format!("bad support '{}'", field(3))))?;

            let slot = row_count % BAND_COUNT;
            if row_count < BAND_COUNT {
                if bands.contains(&band) {
                    return Err(Error::parse(path, loc, format!("band '{band}' repeated within class 1")));
                }
                bands.push(band);
            } else if bands[slot] != band {
                return Err(Error::parse(
                    path,
                    loc,
                    format!("band order mismatch: expected '{}', found '{band}'", bands[slot]),
                ));
            }
            if slot == 0 {
                support[class - 1] = sup;
            } else if support[class - 1] != sup {
                return Err(Error::parse(
                    path,
                    loc,
                    format!("support {sup} disagrees with {} for class {class}", support[class - 1]),
                ));
            }
            if sup > 0 {
                let mean: f64 = field(2)
                    .parse()
                    .map_err(|_| Error::parse(path, loc.clone(), format!("bad mean '{}'", field(2))))?;
                means[class - 1][slot] = T::from_f64_nearest(mean);
            } else if !field(2).is_empty() {
                return Err(Error::parse(path, loc, "mean present for class with zero support"));
            }
            row_count += 1;
        }
        if row_count != CLASS_COUNT * BAND_COUNT {
            return Err(Error::parse(
                path,
                "file",
                format!("expected {} rows, found {row_count}", CLASS_COUNT * BAND_COUNT),
            ));
        }
        Ok(SignatureTable {
            bands: bands.try_into().expect("six bands"),
            means,
            support,
        })
    }
}

/// Pool per-class spectral signatures over reference imagery.
///
/// Every (pixel, image) pair where the reference class is valid and the
/// image pixel is valid in all bands contributes one observation to its
/// class. Means are pooled across all observations; `support` counts them.
pub fn extract_signatures<T: Scalar>(
    reference: &ImperviousMap<T>,
    images: &[MultibandRaster<T>],
) -> Result<SignatureTable<T>> {
    if images.is_empty() {
        return Err(Error::EmptyInput {
            what: "signature extraction requires at least one image".to_string(),
        });
    }
    for img in images {
        if img.geometry() != reference.raster().geometry() {
            return Err(Error::GridMismatch {
                detail: "reference map and imagery grids differ".to_string(),
            });
        }
    }
    let mut bands = [Band::Blue; BAND_COUNT];
    bands.copy_from_slice(images[0].bands());
    for img in &images[1..] {
        if img.bands() != bands.as_slice() {
            return Err(Error::BandMismatch {
                detail: "images disagree on band order".to_string(),
            });
        }
    }

    let ref_raster = reference.raster();
    let mut sums = [[0.0f64; BAND_COUNT]; CLASS_COUNT];
    let mut support = [0u64; CLASS_COUNT];
    for img in images {
        for i in 0..ref_raster.samples().len() {
            if !ref_raster.validity()[i] {
                continue;
            }
            let Some(spectrum) = img.spectrum(i) else { continue };
            let class = ref_raster.samples()[i].as_f64().round() as usize;
            debug_assert!((1..=CLASS_COUNT).contains(&class));
            for (b, v) in spectrum.iter().enumerate() {
                sums[class - 1][b] += v.as_f64();
            }
            support[class - 1] += 1;
        }
    }
    if support.iter().all(|&s| s == 0) {
        return Err(Error::DisjointReference);
    }
    let mut means = [[T::zero(); BAND_COUNT]; CLASS_COUNT];
    for c in 0..CLASS_COUNT {
        if support[c] > 0 {
            for b in 0..BAND_COUNT {
                means[c][b] = T::from_f64_nearest(sums[c][b] / support[c] as f64);
            }
        }
    }
    Ok(SignatureTable { bands, means, support })
}

/// Distance metric for signature matching.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum DistanceMetric {
    #[default]
    Euclidean,
}

/// Neighbour weighting scheme.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum NeighborWeighting {
    #[default]
    Equal,
}

/// k-NN configuration. Only `k = 1` is supported here; the field exists so
/// call sites state the choice explicitly.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct KnnConfig {
    pub k: usize,
    pub metric: DistanceMetric,
    pub weighting: NeighborWeighting,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: 1,
            metric: DistanceMetric::Euclidean,
            weighting: NeighborWeighting::Equal,
        }
    }
}

/// Label each valid pixel with the class of the nearest signature.
///
/// Distances are Euclidean over the six bands; ties take the lowest class
/// index. Pixels masked in any band stay masked.
pub fn knn_classify<T: Scalar>(
    image: &MultibandRaster<T>,
    table: &SignatureTable<T>,
    config: &KnnConfig,
) -> Result<ImperviousMap<T>> {
    if config.k != 1 {
        return Err(Error::UnsupportedKnn { k: config.k });
    }
    if image.bands() != table.bands().as_slice() {
        return Err(Error::BandMismatch {
            detail: format!("image bands {:?} vs signature bands {:?}", image.bands(), table.bands()),
        });
    }
    let classes = table.present_classes();
    if classes.is_empty() {
        return Err(Error::EmptyInput {
            what: "signature table has no populated classes".to_string(),
        });
    }

    let g = *image.geometry();
    let mut out = Raster::masked(g);
    let mut any_valid = false;
    for i in 0..g.len() {
        let Some(spectrum) = image.spectrum(i) else { continue };
        any_valid = true;
        let mut best_class = 0u8;
        let mut best_dist = f64::INFINITY;
        for &class in &classes {
            let signature = table.signature(class).expect("present class has a signature");
            let mut d = 0.0f64;
            for b in 0..BAND_COUNT {
                let diff = spectrum[b].as_f64() - signature[b].as_f64();
                d += diff * diff;
            }
            // Strict comparison keeps the lowest class index on ties.
            if d < best_dist {
                best_dist = d;
                best_class = class;
            }
        }
        out.set(i % g.width(), i / g.width(), T::from_f64_nearest(best_class as f64))?;
    }
    if !any_valid {
        return Err(Error::EmptyInput {
            what: "image has no valid pixels".to_string(),
        });
    }
    ImperviousMap::from_raster(out, MapKind::PerImage)
}

/// Average per-image class maps into a fractional composite.
pub fn average_composite<T: Scalar>(maps: &[ImperviousMap<T>]) -> Result<ImperviousMap<T>> {
    if maps.is_empty() {
        return Err(Error::EmptyInput {
            what: "composite requires at least one class map".to_string(),
        });
    }
    let rasters: Vec<Raster<T>> = maps.iter().map(|m| m.raster().clone()).collect();
    ImperviousMap::from_raster(mean_stack(&rasters)?, MapKind::Composite)
}
