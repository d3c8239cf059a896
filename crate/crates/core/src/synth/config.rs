//! Scenario configuration: a flat `key = value` text format.

use std::path::Path;

use crate::error::{Error, Result};
use crate::month::{MonthKey, MonthRange};

/// Everything a scenario needs, with workable defaults for every key.
///
/// Config files assign one key per line (`#` starts a comment, blank lines
/// are skipped, later assignments win). Lists are comma separated and
/// cycled over the tract index when shorter than the tract count.
///
/// Keys: `seed`, `months.start`, `months.end`, `landsat.width`,
/// `landsat.height`, `landsat.pixel_size`, `landsat.x_origin`,
/// `landsat.y_origin`, `landsat.epochs`, `landsat.cloud_probability`,
/// `viirs.scale`, `spectral.noise_sigma`, `tracts.rows`, `tracts.cols`,
/// `tracts.populations`, `tracts.buildings`, `tracts.id_base`,
/// `brightness.base`, `brightness.slope`, `brightness.seasonal`,
/// `brightness.noise_rel`, `storm.onset`, `storm.outage`,
/// `storm.recovery_rate`, `clouds.probability`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub months: MonthRange,
    pub landsat_width: usize,
    pub landsat_height: usize,
    pub landsat_pixel_size: f64,
    pub landsat_x_origin: f64,
    /// Defaults to `height * pixel_size` so the extent starts at y = 0.
    pub landsat_y_origin: Option<f64>,
    /// Number of multiband images to synthesize.
    pub landsat_epochs: usize,
    /// Chance that a pixel is masked in a given epoch (all bands).
    pub landsat_cloud_probability: f64,
    /// Brightness pixels are this many imagery pixels across; must divide
    /// both grid dimensions.
    pub viirs_scale: usize,
    /// Gaussian noise added to each band sample.
    pub spectral_noise_sigma: f64,
    pub tract_rows: usize,
    pub tract_cols: usize,
    pub tract_populations: Vec<u64>,
    pub tract_buildings: Vec<u64>,
    pub tract_id_base: u64,
    /// Per-tract brightness level, cycled.
    pub brightness_base: Vec<f64>,
    /// Shared monthly trend.
    pub brightness_slope: f64,
    /// Shared additive term per calendar month (January first).
    pub brightness_seasonal: [f64; 12],
    /// Radiance noise as a fraction of the tract's base level.
    pub brightness_noise_rel: f64,
    pub storm_onset: MonthKey,
    /// Per-tract initial outage fraction, cycled.
    pub storm_outage: Vec<f64>,
    /// Fraction of the remaining outage recovered each month.
    pub storm_recovery_rate: f64,
    /// Chance that a brightness pixel-month is fully clouded out.
    pub cloud_probability: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            months: MonthRange::new(
                MonthKey::new(2012, 4).expect("valid month"),
                MonthKey::new(2018, 5).expect("valid month"),
            )
            .expect("valid range"),
            landsat_width: 64,
            landsat_height: 64,
            landsat_pixel_size: 30.0,
            landsat_x_origin: 0.0,
            landsat_y_origin: None,
            landsat_epochs: 4,
            landsat_cloud_probability: 0.0,
            viirs_scale: 2,
            spectral_noise_sigma: 0.0,
            tract_rows: 2,
            tract_cols: 2,
            tract_populations: vec![1000, 1500, 2000, 800],
            tract_buildings: vec![300, 450, 600, 250],
            tract_id_base: 9500,
            brightness_base: vec![50.0, 80.0, 65.0, 40.0],
            brightness_slope: 0.05,
            brightness_seasonal: [
                2.5, 1.5, 0.5, -0.5, -1.5, -2.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5,
            ],
            brightness_noise_rel: 0.0,
            storm_onset: MonthKey::new(2017, 9).expect("valid month"),
            storm_outage: vec![0.6, 0.3, 0.0],
            storm_recovery_rate: 0.1,
            cloud_probability: 0.0,
        }
    }
}

fn config_err(key: &str, detail: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        detail: detail.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| config_err(key, format!("cannot parse '{value}'")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items = value
        .split(',')
        .map(|item| parse_num(key, item.trim()))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(config_err(key, "list must not be empty"));
    }
    Ok(items)
}

fn parse_month(key: &str, value: &str) -> Result<MonthKey> {
    value
        .parse()
        .map_err(|_| config_err(key, format!("cannot parse '{value}' as YYYY-MM")))
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str_checked(&text)
    }

    /// Parse config text over the defaults, then validate.
    pub fn from_str_checked(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        let mut start = cfg.months.start();
        let mut end = cfg.months.end();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(
                    &format!("line {}", lineno + 1),
                    format!("expected 'key = value', found '{line}'"),
                )
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "seed" => cfg.seed = parse_num(key, value)?,
                "months.start" => start = parse_month(key, value)?,
                "months.end" => end = parse_month(key, value)?,
                "landsat.width" => cfg.landsat_width = parse_num(key, value)?,
                "landsat.height" => cfg.landsat_height = parse_num(key, value)?,
                "landsat.pixel_size" => cfg.landsat_pixel_size = parse_num(key, value)?,
                "landsat.x_origin" => cfg.landsat_x_origin = parse_num(key, value)?,
                "landsat.y_origin" => cfg.landsat_y_origin = Some(parse_num(key, value)?),
                "landsat.epochs" => cfg.landsat_epochs = parse_num(key, value)?,
                "landsat.cloud_probability" => {
                    cfg.landsat_cloud_probability = parse_num(key, value)?
                }
                "viirs.scale" => cfg.viirs_scale = parse_num(key, value)?,
                "spectral.noise_sigma" => cfg.spectral_noise_sigma = parse_num(key, value)?,
                "tracts.rows" => cfg.tract_rows = parse_num(key, value)?,
                "tracts.cols" => cfg.tract_cols = parse_num(key, value)?,
                "tracts.populations" => cfg.tract_populations = parse_list(key, value)?,
                "tracts.buildings" => cfg.tract_buildings = parse_list(key, value)?,
                "tracts.id_base" => cfg.tract_id_base = parse_num(key, value)?,
                "brightness.base" => cfg.brightness_base = parse_list(key, value)?,
                "brightness.slope" => cfg.brightness_slope = parse_num(key, value)?,
                "brightness.seasonal" => {
                    let list: Vec<f64> = parse_list(key, value)?;
                    cfg.brightness_seasonal = list
                        .try_into()
                        .map_err(|_| config_err(key, "needs exactly 12 values"))?;
                }
                "brightness.noise_rel" => cfg.brightness_noise_rel = parse_num(key, value)?,
                "storm.onset" => cfg.storm_onset = parse_month(key, value)?,
                "storm.outage" => cfg.storm_outage = parse_list(key, value)?,
                "storm.recovery_rate" => cfg.storm_recovery_rate = parse_num(key, value)?,
                "clouds.probability" => cfg.cloud_probability = parse_num(key, value)?,
                other => return Err(config_err(other, "unknown key")),
            }
        }
        cfg.months = MonthRange::new(start, end)
            .map_err(|e| config_err("months.start", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.landsat_width == 0 || self.landsat_height == 0 {
            return Err(config_err("landsat.width", "grid dimensions must be positive"));
        }
        if self.landsat_pixel_size <= 0.0 || self.landsat_pixel_size.is_nan() {
            return Err(config_err("landsat.pixel_size", "must be positive"));
        }
        if self.landsat_epochs == 0 {
            return Err(config_err("landsat.epochs", "need at least one image"));
        }
        if self.viirs_scale == 0
            || !self.landsat_width.is_multiple_of(self.viirs_scale)
            || !self.landsat_height.is_multiple_of(self.viirs_scale)
        {
            return Err(config_err(
                "viirs.scale",
                format!(
                    "{} must divide both {} and {}",
                    self.viirs_scale, self.landsat_width, self.landsat_height
                ),
            ));
        }
        if self.tract_rows == 0 || self.tract_cols == 0 {
            return Err(config_err("tracts.rows", "tract layout must be at least 1x1"));
        }
        if self.tract_cols > self.landsat_width / self.viirs_scale
            || self.tract_rows > self.landsat_height / self.viirs_scale
        {
            return Err(config_err(
                "tracts.cols",
                "more tracts than brightness pixels along an axis",
            ));
        }
        for (key, p) in [
            ("landsat.cloud_probability", self.landsat_cloud_probability),
            ("clouds.probability", self.cloud_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(config_err(key, format!("probability {p} outside [0, 1]")));
            }
        }
        for (key, s) in [
            ("spectral.noise_sigma", self.spectral_noise_sigma),
            ("brightness.noise_rel", self.brightness_noise_rel),
        ] {
            if s < 0.0 || s.is_nan() {
                return Err(config_err(key, format!("noise level {s} must be nonnegative")));
            }
        }
        for &o in &self.storm_outage {
            if !(0.0..=1.0).contains(&o) {
                return Err(config_err("storm.outage", format!("fraction {o} outside [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.storm_recovery_rate) {
            return Err(config_err("storm.recovery_rate", "must lie in [0, 1]"));
        }
        if !self.months.contains(self.storm_onset) {
            return Err(config_err(
                "storm.onset",
                format!("{} outside the scenario months", self.storm_onset),
            ));
        }
        Ok(())
    }

    /// Resolved top-left y coordinate.
    pub fn y_origin(&self) -> f64 {
        self.landsat_y_origin
            .unwrap_or(self.landsat_height as f64 * self.landsat_pixel_size)
    }

    pub fn tract_count(&self) -> usize {
        self.tract_rows * self.tract_cols
    }
}
