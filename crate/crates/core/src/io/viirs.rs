//! Monthly radiance composites paired with their observation counts.
//!
//! A pixel composited from zero cloud-free observations carries no
//! measurement: its radiance must be masked, never read as zero light.
//! Zero radiance under a positive observation count is real darkness and
//! stays valid.

use std::path::Path;

use crate::error::{Error, Result};
use crate::month::MonthKey;
use crate::raster::Raster;
use crate::scalar::Scalar;

/// A monthly radiance composite whose radiance mask already honours the
/// observation counts (constructed via [`MonthlyComposite::new`]).
#[derive(Clone, Debug)]
pub struct MonthlyComposite<T: Scalar = f64> {
    pub month: MonthKey,
    pub radiance: Raster<T>,
    pub observations: Raster<T>,
}

impl<T: Scalar> MonthlyComposite<T> {
    pub fn new(month: MonthKey, radiance: Raster<T>, observations: Raster<T>) -> Result<Self> {
        let radiance = apply_observation_mask(&radiance, &observations)?;
        Ok(MonthlyComposite {
            month,
            radiance,
            observations,
        })
    }
}

/// Mask radiance wherever the observation count is zero or itself masked.
///
/// Observation counts must be nonnegative integers; grids must align.
pub fn apply_observation_mask<T: Scalar>(radiance: &Raster<T>, observations: &Raster<T>) -> Result<Raster<T>> {
    if radiance.geometry() != observations.geometry() {
        return Err(Error::GridMismatch {
            detail: "radiance and observation grids differ".to_string(),
        });
    }
    let w = radiance.geometry().width();
    for (i, (&obs, &valid)) in observations.samples().iter().zip(observations.validity()).enumerate() {
        if valid && (obs < T::zero() || obs.fract() != T::zero()) {
            return Err(Error::OutOfRange {
                what: format!("observation count {obs} at ({}, {}) is not a nonnegative integer", i % w, i / w),
            });
        }
    }
    let mut out = radiance.clone();
    for row in 0..radiance.geometry().height() {
        for col in 0..w {
            match observations.get(col, row) {
                Some(n) if n > T::zero() => {}
                _ => out.set_masked(col, row),
            }
        }
    }
    Ok(out)
}

/// Read a radiance/observations file pair and apply the mask.
pub fn read_viirs_pair<T: Scalar>(
    month: MonthKey,
    radiance_path: &Path,
    observations_path: &Path,
) -> Result<MonthlyComposite<T>> {
    let radiance = super::read_raster(radiance_path)?;
    let observations = super::read_raster(observations_path)?;
    MonthlyComposite::new(month, radiance, observations)
}
