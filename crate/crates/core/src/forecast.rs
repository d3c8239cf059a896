//! Seasonal trend models and counterfactual shortfalls.
//!
//! Each tract's monthly brightness series over a training window is
//! decomposed into trend, a twelve-value calendar-month seasonal profile,
//! and residuals. The fitted model projects expected brightness past the
//! window; the shortfall of an observation against its projection is the
//! fraction of expected brightness that failed to appear.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::tracts::csv_error;
use crate::month::{MonthKey, MonthRange};
use crate::zonal::ZonalSeries;

/// Training observations required before a model may be fitted.
pub const MIN_TRAINING_MONTHS: usize = 24;

/// Moving-average window; five months keeps endpoints symmetric.
pub const CMA_WINDOW: usize = 5;

/// Centered moving average; defined only where the full window exists.
pub fn centered_moving_average(values: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    let half = window / 2;
    let n = values.len();
    let mut out = vec![None; n];
    for i in 0..n {
        if i < half || i + half >= n {
            continue;
        }
        let slice = &values[i - half..=i + half];
        if slice.iter().all(|v| v.is_some()) {
            let sum: f64 = slice.iter().map(|v| v.unwrap()).sum();
            out[i] = Some(sum / window as f64);
        }
    }
    out
}

/// A tract series aligned to a training window, with its moving-average
/// trend estimate and detrended values.
#[derive(Clone, Debug)]
pub struct DecompSeries {
    tract_id: String,
    training: MonthRange,
    months: Vec<MonthKey>,
    observed: Vec<Option<f64>>,
    cma: Vec<Option<f64>>,
    detrended: Vec<Option<f64>>,
}

impl DecompSeries {
    pub fn tract_id(&self) -> &str {
        &self.tract_id
    }

    pub fn training(&self) -> MonthRange {
        self.training
    }

    pub fn months(&self) -> &[MonthKey] {
        &self.months
    }

    /// One slot per training month, None where the month lacks data.
    pub fn observed(&self) -> &[Option<f64>] {
        &self.observed
    }

    pub fn cma(&self) -> &[Option<f64>] {
        &self.cma
    }

    /// observed - cma, where both are present.
    pub fn detrended(&self) -> &[Option<f64>] {
        &self.detrended
    }
}

/// Align a series to the training window and detrend it.
///
/// Slots are calendar months, so window positions in the moving average
/// are guaranteed consecutive months. Fewer than [`MIN_TRAINING_MONTHS`]
/// observed months is an error.
pub fn decompose(series: &ZonalSeries, training: MonthRange) -> Result<DecompSeries> {
    let months: Vec<MonthKey> = training.iter().collect();
    let observed: Vec<Option<f64>> = months.iter().map(|&m| series.value_at(m)).collect();
    let present = observed.iter().filter(|v| v.is_some()).count();
    if present < MIN_TRAINING_MONTHS {
        return Err(Error::InsufficientHistory {
            tract_id: series.tract_id().to_string(),
            present,
            required: MIN_TRAINING_MONTHS,
        });
    }
    let cma = centered_moving_average(&observed, CMA_WINDOW);
    let detrended = observed
        .iter()
        .zip(&cma)
        .map(|(o, c)| match (o, c) {
            (Some(o), Some(c)) => Some(o - c),
            _ => None,
        })
        .collect();
    Ok(DecompSeries {
        tract_id: series.tract_id().to_string(),
        training,
        months,
        observed,
        cma,
        detrended,
    })
}

/// A fitted per-tract model: linear trend in months since the training
/// start plus a sum-zero seasonal term per calendar month.
#[derive(Clone, Debug, PartialEq)]
pub struct SeasonalModel {
    pub tract_id: String,
    pub training: MonthRange,
    /// Brightness change per month.
    pub slope: f64,
    /// Level at the training start month.
    pub intercept: f64,
    /// Indexed by calendar month - 1; sums to zero.
    pub seasonal: [f64; 12],
    /// Mean absolute training residual.
    pub mad: f64,
}

impl SeasonalModel {
    /// Model value at any month (no extrapolation guard).
    pub fn predict(&self, month: MonthKey) -> f64 {
        let t = month.index_from(self.training.start()) as f64;
        self.intercept + self.slope * t + self.seasonal[month.month() as usize - 1]
    }

    /// Forecast strictly after the training window.
    pub fn project(&self, month: MonthKey) -> Result<f64> {
        if month <= self.training.end() {
            return Err(Error::ForecastNotAfterTraining {
                month,
                training_end: self.training.end(),
            });
        }
        Ok(self.predict(month))
    }
}

/// Ordinary least squares through (t, y) points; needs two distinct t.
fn ols(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let tbar = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ybar = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(t, y) in points {
        sxx += (t - tbar) * (t - tbar);
        sxy += (t - tbar) * (y - ybar);
    }
    let slope = sxy / sxx;
    (slope, ybar - slope * tbar)
}

/// Fit trend and seasonal terms to a decomposed series.
///
/// The seasonal profile starts from recentered calendar-month means of the
/// detrended series, then trend and profile are refined alternately until
/// both stop moving. On series that are exactly linear plus a seasonal
/// pattern this converges to the generating values; the moving-average
/// initialization alone would not, because a five-month average passes a
/// fraction of any twelve-month cycle through to the trend estimate.
pub fn fit(decomp: &DecompSeries) -> Result<SeasonalModel> {
    // Initial seasonal profile from the classical decomposition.
    let mut sums = [0.0f64; 12];
    let mut counts = [0u64; 12];
    for (m, d) in decomp.months().iter().zip(decomp.detrended()) {
        if let Some(d) = d {
            let cal = m.month() as usize - 1;
            sums[cal] += d;
            counts[cal] += 1;
        }
    }
    for (cal, &count) in counts.iter().enumerate() {
        if count == 0 {
            return Err(Error::MissingSeasonalSupport {
                tract_id: decomp.tract_id().to_string(),
                month: cal as u32 + 1,
            });
        }
    }
    let mut seasonal = [0.0f64; 12];
    for cal in 0..12 {
        seasonal[cal] = sums[cal] / counts[cal] as f64;
    }
    recenter(&mut seasonal);

    // Points (months since training start, observation, calendar slot).
    let start = decomp.training().start();
    let obs: Vec<(f64, f64, usize)> = decomp
        .months()
        .iter()
        .zip(decomp.observed())
        .filter_map(|(m, o)| {
            o.map(|o| (m.index_from(start) as f64, o, m.month() as usize - 1))
        })
        .collect();
    let scale = obs.iter().map(|p| p.1.abs()).fold(1.0f64, f64::max);
    // The refinement passes average over every observation, not just the
    // interior months that have a detrended value.
    let mut obs_counts = [0u64; 12];
    for &(_, _, cal) in &obs {
        obs_counts[cal] += 1;
    }

    let mut slope = 0.0;
    let mut intercept = 0.0;
    for _ in 0..200 {
        let deseasonalized: Vec<(f64, f64)> =
            obs.iter().map(|&(t, y, cal)| (t, y - seasonal[cal])).collect();
        let (new_slope, new_intercept) = ols(&deseasonalized);

        let mut sums = [0.0f64; 12];
        for &(t, y, cal) in &obs {
            sums[cal] += y - new_intercept - new_slope * t;
        }
        let mut new_seasonal = [0.0f64; 12];
        for cal in 0..12 {
            new_seasonal[cal] = sums[cal] / obs_counts[cal] as f64;
        }
        recenter(&mut new_seasonal);

        let mut delta = (new_slope - slope).abs().max((new_intercept - intercept).abs());
        for cal in 0..12 {
            delta = delta.max((new_seasonal[cal] - seasonal[cal]).abs());
        }
        slope = new_slope;
        intercept = new_intercept;
        seasonal = new_seasonal;
        if delta <= 1e-12 * scale {
            break;
        }
    }

    let mad = obs
        .iter()
        .map(|&(t, y, cal)| (y - (intercept + slope * t + seasonal[cal])).abs())
        .sum::<f64>()
        / obs.len() as f64;
    Ok(SeasonalModel {
        tract_id: decomp.tract_id().to_string(),
        training: decomp.training(),
        slope,
        intercept,
        seasonal,
        mad,
    })
}

fn recenter(seasonal: &mut [f64; 12]) {
    let mean = seasonal.iter().sum::<f64>() / 12.0;
    for s in seasonal.iter_mut() {
        *s -= mean;
    }
}

/// One forecast month for one tract.
#[derive(Clone, Debug, PartialEq)]
pub struct ShortfallRecord {
    pub tract_id: String,
    pub month: MonthKey,
    /// Observed brightness, when the month has data.
    pub observed: Option<f64>,
    pub forecast: f64,
    /// (forecast - observed) / forecast, unclamped; None without an
    /// observation or when the forecast is degenerate.
    pub shortfall_raw: Option<f64>,
    /// Raw shortfall clamped into [0, 1].
    pub shortfall: Option<f64>,
    /// Whether |forecast - observed| exceeds the model's mean absolute
    /// deviation; None without an observation.
    pub significant: Option<bool>,
    /// A nonpositive forecast cannot anchor a shortfall fraction.
    pub degenerate: bool,
}

/// Compare observations against projections across a forecast window.
pub fn compute_shortfalls(
    model: &SeasonalModel,
    series: &ZonalSeries,
    window: MonthRange,
) -> Result<Vec<ShortfallRecord>> {
    let mut out = Vec::with_capacity(window.len());
    for month in window.iter() {
        let forecast = model.project(month)?;
        let observed = series.value_at(month);
        let degenerate = forecast <= 0.0;
        let shortfall_raw = match observed {
            Some(o) if !degenerate => Some((forecast - o) / forecast),
            _ => None,
        };
        out.push(ShortfallRecord {
            tract_id: model.tract_id.clone(),
            month,
            observed,
            forecast,
            shortfall_raw,
            shortfall: shortfall_raw.map(|r| r.clamp(0.0, 1.0)),
            significant: observed.map(|o| (forecast - o).abs() > model.mad),
            degenerate,
        });
    }
    Ok(out)
}

/// Write models as CSV `tract_id,slope,intercept,mad,s1..s12`, sorted by
/// tract id. The training window is not stored; readers supply it.
pub fn write_models_csv(models: &[SeasonalModel], path: &Path) -> Result<()> {
    let mut sorted: Vec<&SeasonalModel> = models.iter().collect();
    sorted.sort_by(|a, b| a.tract_id.cmp(&b.tract_id));
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec![
        "tract_id".to_string(),
        "slope".to_string(),
        "intercept".to_string(),
        "mad".to_string(),
    ];
    header.extend((1..=12).map(|i| format!("s{i}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for m in sorted {
        let mut row = vec![
            m.tract_id.clone(),
            m.slope.to_string(),
            m.intercept.to_string(),
            m.mad.to_string(),
        ];
        row.extend(m.seasonal.iter().map(|s| s.to_string()));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read models written by [`write_models_csv`], attaching the training
/// window they were fitted on.
pub fn read_models_csv(path: &Path, training: MonthRange) -> Result<Vec<SeasonalModel>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut expected = vec!["tract_id".to_string(), "slope".to_string(), "intercept".to_string(), "mad".to_string()];
    expected.extend((1..=12).map(|i| format!("s{i}")));
    if headers.iter().map(str::to_string).collect::<Vec<_>>() != expected {
        return Err(Error::parse(path, "line 1", format!("unexpected header {headers:?}")));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let loc = format!("line {line}");
        let num = |i: usize| -> Result<f64> {
            record
                .get(i)
                .unwrap_or("")
                .parse()
                .map_err(|_| Error::parse(path, loc.clone(), format!("bad number '{}'", record.get(i).unwrap_or(""))))
        };
        let mut seasonal = [0.0f64; 12];
        for (cal, s) in seasonal.iter_mut().enumerate() {
            *s = num(4 + cal)?;
        }
        out.push(SeasonalModel {
            tract_id: record.get(0).unwrap_or("").to_string(),
            training,
            slope: num(1)?,
            intercept: num(2)?,
            mad: num(3)?,
            seasonal,
        });
    }
    Ok(out)
}

/// Write shortfall rows as CSV sorted by (tract_id, year, month). The
/// degenerate flag is not a column; readers recompute it from `forecast`.
pub fn write_shortfalls_csv(records: &[ShortfallRecord], path: &Path) -> Result<()> {
    let mut sorted: Vec<&ShortfallRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (&a.tract_id, a.month).cmp(&(&b.tract_id, b.month)));
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record([
        "tract_id",
        "year",
        "month",
        "observed",
        "forecast",
        "shortfall_raw",
        "shortfall",
        "significant",
    ])
    .map_err(|e| csv_error(path, e))?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for rec in sorted {
        w.write_record([
            rec.tract_id.as_str(),
            &rec.month.year().to_string(),
            &rec.month.month().to_string(),
            &opt(rec.observed),
            &rec.forecast.to_string(),
            &opt(rec.shortfall_raw),
            &opt(rec.shortfall),
            &rec.significant.map(|s| s.to_string()).unwrap_or_default(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read rows written by [`write_shortfalls_csv`].
pub fn read_shortfalls_csv(path: &Path) -> Result<Vec<ShortfallRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = [
        "tract_id",
        "year",
        "month",
        "observed",
        "forecast",
        "shortfall_raw",
        "shortfall",
        "significant",
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
        let opt_num = |i: usize| -> Result<Option<f64>> {
            if field(i).is_empty() {
                Ok(None)
            } else {
                field(i)
                    .parse()
                    .map(Some)
                    .map_err(|_| Error::parse(path, loc.clone(), format!("bad number '{}'", field(i))))
            }
        };
        let year: i32 = field(1)
            .parse()
            .map_err(|_| Error::parse(path, loc.clone(), format!("bad year '{}'", field(1))))?;
        let month_no: u32 = field(2)
            .parse()
            .map_err(|_| Error::parse(path, loc.clone(), format!("bad month '{}'", field(2))))?;
        let month = MonthKey::new(year, month_no)
            .map_err(|e| Error::parse(path, loc.clone(), e.to_string()))?;
        let forecast: f64 = field(4)
            .parse()
            .map_err(|_| Error::parse(path, loc.clone(), format!("bad forecast '{}'", field(4))))?;
        let significant = match field(7) {
            "" => None,
            "true" => Some(true),
            "false" => Some(false),
            other => return Err(Error::parse(path, loc, format!("bad significant flag '{other}'"))),
        };
        out.push(ShortfallRecord {
            tract_id: field(0).to_string(),
            month,
            observed: opt_num(3)?,
            forecast,
            shortfall_raw: opt_num(5)?,
            shortfall: opt_num(6)?,
            significant,
            degenerate: forecast <= 0.0,
        });
    }
    Ok(out)
}

/// Group shortfall records by tract id, preserving row order inside each.
pub fn shortfalls_by_tract(records: &[ShortfallRecord]) -> BTreeMap<&str, Vec<&ShortfallRecord>> {
    let mut map: BTreeMap<&str, Vec<&ShortfallRecord>> = BTreeMap::new();
    for rec in records {
        map.entry(rec.tract_id.as_str()).or_default().push(rec);
    }
    map
}
