//! Urban development index rasters.
//!
//! A UDI pixel is the product of an impervious class (1..=10, possibly
//! fractional from a composite) and a nighttime brightness value. With
//! brightness on a 0-100 scale the index spans 0 to 1000.

use crate::classify::ImperviousMap;
use crate::error::{Error, Result};
use crate::month::MonthKey;
use crate::raster::{combine, mean_stack, CombineMode, Raster};
use crate::scalar::Scalar;

/// What a UDI raster represents.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum UdiTag {
    /// Index for a single month of brightness data.
    Month(MonthKey),
    /// Average of monthly indices over a pre-event window.
    PrestormComposite,
}

/// A UDI raster together with the tag saying what it covers.
#[derive(Clone, Debug)]
pub struct UdiRaster<T: Scalar = f64> {
    tag: UdiTag,
    raster: Raster<T>,
}

impl<T: Scalar> UdiRaster<T> {
    pub fn tag(&self) -> UdiTag {
        self.tag
    }

    pub fn raster(&self) -> &Raster<T> {
        &self.raster
    }

    pub fn into_raster(self) -> Raster<T> {
        self.raster
    }
}

/// Multiply impervious classes with brightness on the impervious grid.
///
/// The brightness raster must already be resampled onto the impervious
/// grid; a pixel is valid only where both inputs are.
pub fn compute_udi<T: Scalar>(
    impervious: &ImperviousMap<T>,
    brightness: &Raster<T>,
    tag: UdiTag,
) -> Result<UdiRaster<T>> {
    let raster = combine(impervious.raster(), brightness, CombineMode::Multiply)?;
    Ok(UdiRaster { tag, raster })
}

/// Per-pixel mean of monthly UDI rasters, tagged as the pre-event baseline.
pub fn prestorm_baseline<T: Scalar>(months: &[UdiRaster<T>]) -> Result<UdiRaster<T>> {
    if months.is_empty() {
        return Err(Error::EmptyInput {
            what: "baseline requires at least one monthly index".to_string(),
        });
    }
    let rasters: Vec<Raster<T>> = months.iter().map(|m| m.raster.clone()).collect();
    Ok(UdiRaster {
        tag: UdiTag::PrestormComposite,
        raster: mean_stack(&rasters)?,
    })
}

/// How to express change between two UDI rasters.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ChangeMode {
    /// after - before
    Subtract,
    /// 100 * (after - before) / before
    PercentChange,
}

/// Change raster between two indices (after vs. before).
pub fn udi_change<T: Scalar>(
    after: &UdiRaster<T>,
    before: &UdiRaster<T>,
    mode: ChangeMode,
) -> Result<Raster<T>> {
    let mode = match mode {
        ChangeMode::Subtract => CombineMode::Subtract,
        ChangeMode::PercentChange => CombineMode::PercentChange,
    };
    combine(&after.raster, &before.raster, mode)
}
