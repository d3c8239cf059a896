//! Readers and writers for the on-disk formats.
//!
//! Rasters travel as `rbin` (bit-exact little-endian binary) or ESRI ASCII
//! grids; tract polygons as GeoJSON; tabular artifacts as CSV. File nodata
//! sentinels become mask bits at ingest and reappear only at export.

pub mod ascii;
pub mod rbin;
pub mod tracts;
pub mod viirs;

use std::path::Path;

use crate::error::{Error, Result};
use crate::month::MonthKey;
use crate::raster::{Band, MultibandRaster, Raster};
use crate::scalar::Scalar;

pub use tracts::{read_tracts, write_census_csv, write_tracts, TractCollection, TractPolygon};
pub use viirs::{apply_observation_mask, read_viirs_pair, MonthlyComposite};

/// Raster file format, inferred from the path extension.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RasterFormat {
    Rbin,
    Ascii,
}

impl RasterFormat {
    pub fn from_path(path: &Path) -> Result<RasterFormat> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("rbin") => Ok(RasterFormat::Rbin),
            Some("asc") => Ok(RasterFormat::Ascii),
            other => Err(Error::parse(
                path,
                "extension",
                format!("unsupported raster extension {other:?} (expected .rbin or .asc)"),
            )),
        }
    }
}

/// Read a raster, dispatching on the file extension.
pub fn read_raster<T: Scalar>(path: &Path) -> Result<Raster<T>> {
    match RasterFormat::from_path(path)? {
        RasterFormat::Rbin => rbin::read(path),
        RasterFormat::Ascii => ascii::read(path),
    }
}

/// Write a raster, dispatching on the file extension.
pub fn write_raster<T: Scalar>(raster: &Raster<T>, path: &Path) -> Result<()> {
    match RasterFormat::from_path(path)? {
        RasterFormat::Rbin => rbin::write(raster, path),
        RasterFormat::Ascii => ascii::write(raster, path),
    }
}

/// Path of one band of a multiband image stored as `<stem>_<band>.rbin`.
pub fn band_path(stem: &Path, band: Band) -> std::path::PathBuf {
    let mut name = stem
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push('_');
    name.push_str(band.name());
    name.push_str(".rbin");
    stem.with_file_name(name)
}

/// Read the six canonical bands of `<stem>_<band>.rbin`.
pub fn read_multiband<T: Scalar>(stem: &Path) -> Result<MultibandRaster<T>> {
    let rasters = Band::ALL
        .iter()
        .map(|&b| read_raster(&band_path(stem, b)))
        .collect::<Result<Vec<_>>>()?;
    MultibandRaster::from_canonical(rasters)
}

/// Write a multiband image as `<stem>_<band>.rbin`, one file per band.
pub fn write_multiband<T: Scalar>(image: &MultibandRaster<T>, stem: &Path) -> Result<()> {
    for (band, raster) in image.bands().iter().zip(image.rasters()) {
        write_raster(raster, &band_path(stem, *band))?;
    }
    Ok(())
}

/// File name of a monthly radiance composite.
pub fn radiance_name(month: MonthKey) -> String {
    format!("viirs_{:04}_{:02}_rad.rbin", month.year(), month.month())
}

/// File name of a monthly observation-count raster.
pub fn observations_name(month: MonthKey) -> String {
    format!("viirs_{:04}_{:02}_obs.rbin", month.year(), month.month())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    #[test]
    fn format_dispatch_follows_extension() {
        assert_eq!(RasterFormat::from_path(Path::new("a/b.rbin")).unwrap(), RasterFormat::Rbin);
        assert_eq!(RasterFormat::from_path(Path::new("a/b.asc")).unwrap(), RasterFormat::Ascii);
        assert!(RasterFormat::from_path(Path::new("a/b.tif")).is_err());
        assert!(RasterFormat::from_path(Path::new("bare")).is_err());
    }

    #[test]
    fn band_paths_share_the_stem() {
        assert_eq!(
            band_path(Path::new("out/landsat_pre_00"), Band::Swir1),
            PathBuf::from("out/landsat_pre_00_swir1.rbin")
        );
    }

    #[test]
    fn monthly_file_names_are_zero_padded() {
        let m = MonthKey::new(2017, 9).unwrap();
        assert_eq!(radiance_name(m), "viirs_2017_09_rad.rbin");
        assert_eq!(observations_name(m), "viirs_2017_09_obs.rbin");
    }
}
