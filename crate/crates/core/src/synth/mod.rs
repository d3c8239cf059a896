//! Deterministic synthetic scenario generation.
//!
//! A scenario is a small island: a percent-impervious reference map, a few
//! epochs of multiband imagery whose spectra encode the class structure,
//! monthly radiance/observation pairs following a per-tract brightness
//! model with a storm-shaped outage, rectangular census tracts, and a
//! ground-truth manifest recording what the pipeline should recover.

mod config;
mod generate;

pub use config::ScenarioConfig;
pub use generate::{
    generate, read_manifest_csv, GroundTruth, IslandTruth, TruthRow, MAX_OBSERVATIONS,
};
