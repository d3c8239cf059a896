//! Crate-wide error and result types.

use std::path::PathBuf;

use crate::month::MonthKey;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error at {location}: {detail}")]
    Parse {
        path: PathBuf,
        location: String,
        detail: String,
    },

    #[error("invalid month '{0}': expected YYYY-MM with month 01..=12")]
    MonthFormat(String),

    #[error("invalid grid geometry: {detail}")]
    InvalidGeometry { detail: String },

    #[error("grids not aligned: {detail}")]
    GridMismatch { detail: String },

    #[error("no spatial overlap between source and target extents")]
    NoOverlap,

    #[error("empty input: {what}")]
    EmptyInput { what: String },

    #[error("value out of range: {what}")]
    OutOfRange { what: String },

    #[error("valid sample at ({col}, {row}) equals the nodata sentinel {value}")]
    SentinelCollision { col: usize, row: usize, value: f64 },

    #[error("band order mismatch: {detail}")]
    BandMismatch { detail: String },

    #[error("unsupported k-NN configuration: k = {k} (only k = 1 is supported)")]
    UnsupportedKnn { k: usize },

    #[error("reference and imagery disjoint: no class has any valid observation")]
    DisjointReference,

    #[error("tract '{tract_id}': {detail}")]
    Tract { tract_id: String, detail: String },

    #[error("feature {index}: {detail}")]
    Feature { index: usize, detail: String },

    #[error("geometry drift: footprint of tract '{tract_id}' references pixels outside the raster grid")]
    GeometryDrift { tract_id: String },

    #[error("insufficient history for tract '{tract_id}': {present} present months in the training window, need at least {required}")]
    InsufficientHistory {
        tract_id: String,
        present: usize,
        required: usize,
    },

    #[error("tract '{tract_id}': no training support for calendar month {month:02}")]
    MissingSeasonalSupport { tract_id: String, month: u32 },

    #[error("forecast month {month} does not follow the training window ending {training_end}")]
    ForecastNotAfterTraining {
        month: MonthKey,
        training_end: MonthKey,
    },

    #[error("unknown tract '{tract_id}': {detail}")]
    UnknownTract { tract_id: String, detail: String },

    #[error("invalid sample size: {detail}")]
    SampleSize { detail: String },

    #[error("sample point {index} at ({col}, {row}) has no interpreted label")]
    Unlabeled { index: usize, col: usize, row: usize },

    #[error("scenario config key '{key}': {detail}")]
    Config { key: String, detail: String },
}

impl Error {
    /// Wrap an i/o error with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Build a parse error naming a byte or line offset within a file.
    pub fn parse(path: impl Into<PathBuf>, location: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            location: location.into(),
            detail: detail.into(),
        }
    }
}
