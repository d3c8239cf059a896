//! Raster time-series toolkit for mapping urban development from satellite
//! imagery and tracking its disruption and recovery after a disaster.
//!
//! The pipeline stages, each its own module:
//!
//! * [`raster`]: masked rasters on regular grids with combine / mean-stack /
//!   nearest-centre resample operations.
//! * [`io`]: bit-exact raster formats (`rbin`, ESRI ASCII grid), monthly
//!   radiance/observation pairs, tract polygons (GeoJSON), CSV schemas.
//! * [`classify`]: transfer-learning impervious-surface mapping (percent
//!   reclassification, class signatures, 1-NN labelling, composites).
//! * [`udi`]: urban development index (impervious class x radiance) and
//!   change maps against a pre-storm baseline.
//! * [`zonal`]: polygon rasterization by pixel centre and per-tract
//!   statistics.
//! * [`forecast`]: seasonal decomposition (5-month centred moving average),
//!   trend + seasonal fitting, projection, and shortfall records.
//! * [`impact`]: population/building impact aggregation, stratified accuracy
//!   sampling, confusion matrices.
//! * [`synth`]: deterministic synthetic scenario generator with ground-truth
//!   manifest, for verification end to end.
//!
//! Core containers and math are generic over the sample scalar (`f32` or
//! `f64`, see [`Scalar`]); the concrete aliases below pin the two useful
//! instantiations. The pipeline works in `f64` and stores raster files as
//! `f32`.

pub mod classify;
pub mod error;
pub mod forecast;
pub mod impact;
pub mod io;
pub mod month;
pub mod raster;
pub mod scalar;
pub mod synth;
pub mod udi;
pub mod zonal;

pub use error::{Error, Result};
pub use month::{MonthKey, MonthRange};
pub use scalar::Scalar;

/// Working-precision raster (pipeline default).
pub type Raster64 = raster::Raster<f64>;
/// Storage-precision raster (matches the on-disk payload).
pub type Raster32 = raster::Raster<f32>;
/// Working-precision six-band image.
pub type Multiband64 = raster::MultibandRaster<f64>;
/// Working-precision impervious-surface map.
pub type ImperviousMap64 = classify::ImperviousMap<f64>;
/// Working-precision signature table.
pub type SignatureTable64 = classify::SignatureTable<f64>;
/// Working-precision UDI raster.
pub type UdiRaster64 = udi::UdiRaster<f64>;
