//! Island-wide impact aggregation and accuracy assessment.
//!
//! Shortfall fractions roll up to persons-without-power and buildings-lost
//! totals weighted by census attributes, with an uncertainty band from
//! each model's mean absolute deviation. Accuracy assessment draws a
//! stratified random sample of a class map for manual interpretation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classify::{ImperviousMap, CLASS_COUNT};
use crate::error::{Error, Result};
use crate::forecast::{SeasonalModel, ShortfallRecord};
use crate::io::tracts::{csv_error, TractCollection};
use crate::month::MonthKey;
use crate::scalar::Scalar;

/// Island totals for one month.
///
/// Tracts without a usable shortfall that month (no record, no observation,
/// or a degenerate forecast) are excluded from the sums but counted, with
/// their population, so exclusions are never silent.
#[derive(Clone, PartialEq, Debug)]
pub struct ImpactSummary {
    pub month: MonthKey,
    pub persons_without_power: f64,
    pub persons_uncertainty: f64,
    /// Share of the total island population.
    pub persons_fraction: f64,
    pub buildings_lost: f64,
    pub buildings_uncertainty: f64,
    /// Share of the total island building count.
    pub buildings_fraction: f64,
    pub tracts_included: u64,
    pub tracts_excluded: u64,
    pub population_excluded: u64,
}

/// Per-tract mean absolute deviation, for uncertainty propagation.
pub fn mad_lookup(models: &[SeasonalModel]) -> BTreeMap<String, f64> {
    models.iter().map(|m| (m.tract_id.clone(), m.mad)).collect()
}

/// Aggregate shortfall records into monthly island totals.
///
/// Records may span several months; output is sorted by month. Every
/// record's tract id must resolve to a tract and a deviation entry.
pub fn compute_impacts(
    records: &[ShortfallRecord],
    mads: &BTreeMap<String, f64>,
    tracts: &TractCollection,
) -> Result<Vec<ImpactSummary>> {
    let total_population = tracts.total_population();
    let total_buildings = tracts.total_buildings();

    let mut by_month: BTreeMap<MonthKey, Vec<&ShortfallRecord>> = BTreeMap::new();
    for rec in records {
        by_month.entry(rec.month).or_default().push(rec);
    }

    let mut out = Vec::with_capacity(by_month.len());
    for (month, recs) in by_month {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut summary = ImpactSummary {
            month,
            persons_without_power: 0.0,
            persons_uncertainty: 0.0,
            persons_fraction: 0.0,
            buildings_lost: 0.0,
            buildings_uncertainty: 0.0,
            buildings_fraction: 0.0,
            tracts_included: 0,
            tracts_excluded: 0,
            population_excluded: 0,
        };
        for rec in recs {
            let tract = tracts.get(&rec.tract_id).ok_or_else(|| Error::UnknownTract {
                tract_id: rec.tract_id.clone(),
                detail: "shortfall record has no matching tract".to_string(),
            })?;
            if !seen.insert(&rec.tract_id) {
                return Err(Error::Tract {
                    tract_id: rec.tract_id.clone(),
                    detail: format!("duplicate shortfall record for {month}"),
                });
            }
            match rec.shortfall {
                Some(shortfall) => {
                    let mad = *mads.get(&rec.tract_id).ok_or_else(|| Error::UnknownTract {
                        tract_id: rec.tract_id.clone(),
                        detail: "no fitted model for tract".to_string(),
                    })?;
                    let relative_band = mad / rec.forecast;
                    summary.persons_without_power += shortfall * tract.population as f64;
                    summary.persons_uncertainty += relative_band * tract.population as f64;
                    summary.buildings_lost += shortfall * tract.building_count as f64;
                    summary.buildings_uncertainty += relative_band * tract.building_count as f64;
                    summary.tracts_included += 1;
                }
                None => {
                    summary.tracts_excluded += 1;
                    summary.population_excluded += tract.population;
                }
            }
        }
        // Tracts with no record at all this month are excluded too.
        for tract in tracts.iter() {
            if !seen.contains(tract.tract_id.as_str()) {
                summary.tracts_excluded += 1;
                summary.population_excluded += tract.population;
            }
        }
        if total_population > 0 {
            summary.persons_fraction = summary.persons_without_power / total_population as f64;
        }
        if total_buildings > 0 {
            summary.buildings_fraction = summary.buildings_lost / total_buildings as f64;
        }
        out.push(summary);
    }
    Ok(out)
}

/// Write monthly summaries as CSV sorted by month.
pub fn write_impact_csv(summaries: &[ImpactSummary], path: &Path) -> Result<()> {
    let mut sorted: Vec<&ImpactSummary> = summaries.iter().collect();
    sorted.sort_by_key(|s| s.month);
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record([
        "year",
        "month",
        "persons_without_power",
        "persons_uncertainty",
        "persons_fraction",
        "buildings_lost",
        "buildings_uncertainty",
        "buildings_fraction",
        "tracts_included",
        "tracts_excluded",
        "population_excluded",
    ])
    .map_err(|e| csv_error(path, e))?;
    for s in sorted {
        w.write_record([
            s.month.year().to_string(),
            s.month.month().to_string(),
            s.persons_without_power.to_string(),
            s.persons_uncertainty.to_string(),
            s.persons_fraction.to_string(),
            s.buildings_lost.to_string(),
            s.buildings_uncertainty.to_string(),
            s.buildings_fraction.to_string(),
            s.tracts_included.to_string(),
            s.tracts_excluded.to_string(),
            s.population_excluded.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read summaries written by [`write_impact_csv`].
pub fn read_impact_csv(path: &Path) -> Result<Vec<ImpactSummary>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = [
        "year",
        "month",
        "persons_without_power",
        "persons_uncertainty",
        "persons_fraction",
        "buildings_lost",
        "buildings_uncertainty",
        "buildings_fraction",
        "tracts_included",
        "tracts_excluded",
        "population_excluded",
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
        let month = MonthKey::new(parse_field!(0, i32), parse_field!(1, u32))
            .map_err(|e| Error::parse(path, loc.clone(), e.to_string()))?;
        out.push(ImpactSummary {
            month,
            persons_without_power: parse_field!(2, f64),
            persons_uncertainty: parse_field!(3, f64),
            persons_fraction: parse_field!(4, f64),
            buildings_lost: parse_field!(5, f64),
            buildings_uncertainty: parse_field!(6, f64),
            buildings_fraction: parse_field!(7, f64),
            tracts_included: parse_field!(8, u64),
            tracts_excluded: parse_field!(9, u64),
            population_excluded: parse_field!(10, u64),
        });
    }
    Ok(out)
}

/// One sampled pixel. `reference` is the map class at draw time; the
/// `interpreted` label stays empty until filled in by review.
#[derive(Clone, PartialEq, Debug)]
pub struct SamplePoint {
    pub col: usize,
    pub row: usize,
    /// Pixel-center map coordinates.
    pub x: f64,
    pub y: f64,
    pub stratum: u8,
    pub reference: u8,
    pub interpreted: Option<u8>,
}

/// A stratified random sample with its draw parameters.
#[derive(Clone, Debug)]
pub struct AccuracySample {
    pub points: Vec<SamplePoint>,
    pub seed: u64,
    /// Points per class, indexed by class - 1; sums to the requested n.
    pub allocation: [usize; CLASS_COUNT],
}

/// Minimum one per nonempty stratum, then largest-remainder proportional
/// to stratum sizes, capped by stratum capacity.
fn allocate(sizes: &[usize], n: usize) -> Result<Vec<usize>> {
    let k = sizes.len();
    let total: usize = sizes.iter().sum();
    if n < k {
        return Err(Error::SampleSize {
            detail: format!("{n} points cannot cover {k} nonempty strata"),
        });
    }
    if n > total {
        return Err(Error::SampleSize {
            detail: format!("{n} points exceed {total} candidate pixels"),
        });
    }
    let mut alloc = vec![1usize; k];
    let remaining = n - k;
    if remaining > 0 {
        let mut fracs: Vec<(usize, f64)> = Vec::with_capacity(k);
        let mut assigned = 0usize;
        for (i, &size) in sizes.iter().enumerate() {
            let quota = remaining as f64 * size as f64 / total as f64;
            let base = quota.floor() as usize;
            alloc[i] += base;
            assigned += base;
            fracs.push((i, quota - base as f64));
        }
        fracs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for &(i, _) in fracs.iter().take(remaining - assigned) {
            alloc[i] += 1;
        }
    }
    // Cap at capacity and hand overflow to the roomiest strata.
    let mut excess = 0usize;
    for (i, &size) in sizes.iter().enumerate() {
        if alloc[i] > size {
            excess += alloc[i] - size;
            alloc[i] = size;
        }
    }
    while excess > 0 {
        let i = (0..k)
            .filter(|&i| alloc[i] < sizes[i])
            .max_by_key(|&i| (sizes[i] - alloc[i], std::cmp::Reverse(i)))
            .expect("n does not exceed the candidate total");
        alloc[i] += 1;
        excess -= 1;
    }
    Ok(alloc)
}

/// Draw a stratified random sample of a class map.
///
/// Strata are the ten classes (composite values round to the nearest).
/// Within each stratum, pixels are drawn uniformly without replacement via
/// a seeded generator, strata in ascending class order, so identical
/// inputs reproduce the sample byte for byte.
pub fn stratified_sample<T: Scalar>(
    map: &ImperviousMap<T>,
    n: usize,
    seed: u64,
) -> Result<AccuracySample> {
    let raster = map.raster();
    let g = *raster.geometry();
    let mut strata: Vec<Vec<usize>> = vec![Vec::new(); CLASS_COUNT];
    for i in 0..g.len() {
        if raster.validity()[i] {
            let class = raster.samples()[i].as_f64().round() as usize;
            strata[class - 1].push(i);
        }
    }
    let nonempty: Vec<usize> = (0..CLASS_COUNT).filter(|&c| !strata[c].is_empty()).collect();
    if nonempty.is_empty() {
        return Err(Error::EmptyInput {
            what: "class map has no valid pixels".to_string(),
        });
    }
    let sizes: Vec<usize> = nonempty.iter().map(|&c| strata[c].len()).collect();
    let alloc = allocate(&sizes, n)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut allocation = [0usize; CLASS_COUNT];
    for (slot, &c) in nonempty.iter().enumerate() {
        let take = alloc[slot];
        allocation[c] = take;
        let indices = &mut strata[c];
        // Partial Fisher-Yates: the first `take` slots end up a uniform
        // draw without replacement.
        for j in 0..take {
            let r = rng.random_range(j..indices.len());
            indices.swap(j, r);
        }
        for &i in indices.iter().take(take) {
            let (col, row) = (i % g.width(), i / g.width());
            let (x, y) = g.center(col, row);
            points.push(SamplePoint {
                col,
                row,
                x,
                y,
                stratum: c as u8 + 1,
                reference: c as u8 + 1,
                interpreted: None,
            });
        }
    }
    Ok(AccuracySample { points, seed, allocation })
}

/// Write sample points as CSV `col,row,x,y,stratum,reference,interpreted`
/// in draw order; the interpreted field is empty until labeled.
pub fn write_sample_csv(points: &[SamplePoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["col", "row", "x", "y", "stratum", "reference", "interpreted"])
        .map_err(|e| csv_error(path, e))?;
    for p in points {
        w.write_record([
            p.col.to_string(),
            p.row.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.stratum.to_string(),
            p.reference.to_string(),
            p.interpreted.map(|v| v.to_string()).unwrap_or_default(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read points written by [`write_sample_csv`].
pub fn read_sample_csv(path: &Path) -> Result<Vec<SamplePoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = ["col", "row", "x", "y", "stratum", "reference", "interpreted"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::parse(path, "line 1", format!("unexpected header {headers:?}")));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let loc = format!("line {line}");
        let field = |i: usize| record.get(i).unwrap_or("");
        let class_field = |i: usize| -> Result<u8> {
            let v: u8 = field(i)
                .parse()
                .map_err(|_| Error::parse(path, loc.clone(), format!("bad class '{}'", field(i))))?;
            if !(1..=CLASS_COUNT as u8).contains(&v) {
                return Err(Error::parse(path, loc.clone(), format!("class {v} outside 1..=10")));
            }
            Ok(v)
        };
        let col: usize = field(0)
            .parse()
            .map_err(|_| Error::parse(path, loc.clone(), format!("bad col '{}'", field(0))))?;
        let row: usize = field(1)
            .parse()
            .map_err(|_| Error::parse(path, loc.clone(), format!("bad row '{}'", field(1))))?;
        let x: f64 = field(2)
            .parse()
            .map_err(|_| Error::parse(path, loc.clone(), format!("bad x '{}'", field(2))))?;
        let y: f64 = field(3)
            .parse()
            .map_err(|_| Error::parse(path, loc.clone(), format!("bad y '{}'", field(3))))?;
        let interpreted = if field(6).is_empty() { None } else { Some(class_field(6)?) };
        out.push(SamplePoint {
            col,
            row,
            x,
            y,
            stratum: class_field(4)?,
            reference: class_field(5)?,
            interpreted,
        });
    }
    Ok(out)
}

/// Agreement between reference and interpreted labels.
#[derive(Clone, PartialEq, Debug)]
pub struct AccuracyReport {
    pub total: u64,
    pub correct: u64,
    /// correct / total.
    pub overall: f64,
    /// Rows are reference classes, columns interpreted, both 1..=10.
    pub confusion: [[u64; CLASS_COUNT]; CLASS_COUNT],
}

/// Score a fully labeled sample; any unlabeled point is an error.
pub fn accuracy(points: &[SamplePoint]) -> Result<AccuracyReport> {
    if points.is_empty() {
        return Err(Error::EmptyInput {
            what: "accuracy needs at least one sample point".to_string(),
        });
    }
    let mut confusion = [[0u64; CLASS_COUNT]; CLASS_COUNT];
    for (index, p) in points.iter().enumerate() {
        let interpreted = p.interpreted.ok_or(Error::Unlabeled {
            index,
            col: p.col,
            row: p.row,
        })?;
        confusion[p.reference as usize - 1][interpreted as usize - 1] += 1;
    }
    let total = points.len() as u64;
    let correct = (0..CLASS_COUNT).map(|c| confusion[c][c]).sum();
    Ok(AccuracyReport {
        total,
        correct,
        overall: correct as f64 / total as f64,
        confusion,
    })
}

/// Write a confusion table as CSV: first column the reference class,
/// then one column per interpreted class.
pub fn write_confusion_csv(report: &AccuracyReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["reference".to_string()];
    header.extend((1..=CLASS_COUNT).map(|c| format!("interpreted_{c}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for r in 0..CLASS_COUNT {
        let mut row = vec![(r + 1).to_string()];
        row.extend(report.confusion[r].iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::MapKind;
    use crate::month::MonthRange;
    use crate::raster::{GridGeometry, Raster};
    use tempfile::tempdir;

    fn month(y: i32, m: u32) -> MonthKey {
        MonthKey::new(y, m).unwrap()
    }

    fn tract(id: &str, population: u64, buildings: u64) -> crate::io::tracts::TractPolygon {
        crate::io::tracts::TractPolygon::new(
            id.to_string(),
            population,
            buildings,
            vec![vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]],
        )
        .unwrap()
    }

    fn record(id: &str, m: MonthKey, shortfall: Option<f64>, forecast: f64) -> ShortfallRecord {
        ShortfallRecord {
            tract_id: id.to_string(),
            month: m,
            observed: shortfall.map(|s| forecast * (1.0 - s)),
            forecast,
            shortfall_raw: shortfall,
            shortfall,
            significant: shortfall.map(|s| s > 0.0),
            degenerate: forecast <= 0.0,
        }
    }

    #[test]
    fn persons_and_buildings_weighted_sums() {
        let tracts = TractCollection::new(vec![tract("a", 1000, 400), tract("b", 2000, 0)]).unwrap();
        let m = month(2017, 10);
        let records = vec![record("a", m, Some(0.5), 100.0), record("b", m, Some(0.25), 80.0)];
        let mads: BTreeMap<String, f64> = [("a", 2.0), ("b", 4.0)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let impacts = compute_impacts(&records, &mads, &tracts).unwrap();
        assert_eq!(impacts.len(), 1);
        let s = &impacts[0];
        // 0.5 * 1000 + 0.25 * 2000
        assert_eq!(s.persons_without_power, 1000.0);
        assert_eq!(s.persons_fraction, 1000.0 / 3000.0);
        // Zero-building tract contributes nothing to the building side.
        assert_eq!(s.buildings_lost, 0.5 * 400.0);
        assert_eq!(s.persons_uncertainty, (2.0 / 100.0) * 1000.0 + (4.0 / 80.0) * 2000.0);
        assert_eq!((s.tracts_included, s.tracts_excluded), (2, 0));
        assert_eq!(s.population_excluded, 0);
    }

    #[test]
    fn building_shortfall_alone() {
        let tracts = TractCollection::new(vec![tract("a", 0, 400)]).unwrap();
        let m = month(2017, 10);
        let mads: BTreeMap<String, f64> = [("a".to_string(), 1.0)].into_iter().collect();
        let impacts = compute_impacts(&[record("a", m, Some(0.1), 50.0)], &mads, &tracts).unwrap();
        assert_eq!(impacts[0].buildings_lost, 40.0);
        assert_eq!(impacts[0].persons_without_power, 0.0);
    }

    #[test]
    fn zero_shortfalls_give_zero_impact() {
        let tracts = TractCollection::new(vec![tract("a", 500, 50)]).unwrap();
        let m = month(2018, 1);
        let mads: BTreeMap<String, f64> = [("a".to_string(), 0.5)].into_iter().collect();
        let impacts = compute_impacts(&[record("a", m, Some(0.0), 90.0)], &mads, &tracts).unwrap();
        assert_eq!(impacts[0].persons_without_power, 0.0);
        assert_eq!(impacts[0].persons_fraction, 0.0);
        assert!(impacts[0].persons_uncertainty > 0.0, "band persists at zero shortfall");
    }

    #[test]
    fn exclusions_are_counted_not_dropped() {
        let tracts = TractCollection::new(vec![
            tract("a", 100, 10),
            tract("b", 200, 20),
            tract("c", 400, 40),
            tract("d", 800, 80),
        ])
        .unwrap();
        let m = month(2017, 9);
        let records = vec![
            record("a", m, Some(1.0), 60.0),
            record("b", m, None, 60.0),  // no observation that month
            record("c", m, None, -3.0),  // degenerate forecast
                                         // d: no record at all
        ];
        let mads: BTreeMap<String, f64> = ["a", "b", "c", "d"]
            .iter()
            .map(|k| (k.to_string(), 1.0))
            .collect();
        let s = &compute_impacts(&records, &mads, &tracts).unwrap()[0];
        assert_eq!(s.tracts_included, 1);
        assert_eq!(s.tracts_excluded, 3);
        assert_eq!(s.population_excluded, 200 + 400 + 800);
        assert_eq!(s.persons_without_power, 100.0);
        // Fraction is over the whole island, not just included tracts.
        assert_eq!(s.persons_fraction, 100.0 / 1500.0);
    }

    #[test]
    fn unknown_tract_and_missing_model_are_errors() {
        let tracts = TractCollection::new(vec![tract("a", 100, 10)]).unwrap();
        let m = month(2017, 9);
        let mads: BTreeMap<String, f64> = [("a".to_string(), 1.0)].into_iter().collect();
        assert!(matches!(
            compute_impacts(&[record("zz", m, Some(0.1), 50.0)], &mads, &tracts),
            Err(Error::UnknownTract { .. })
        ));
        let empty_mads = BTreeMap::new();
        assert!(matches!(
            compute_impacts(&[record("a", m, Some(0.1), 50.0)], &empty_mads, &tracts),
            Err(Error::UnknownTract { .. })
        ));
        // A duplicate record for the same tract and month is rejected.
        let dup = vec![record("a", m, Some(0.1), 50.0), record("a", m, Some(0.2), 50.0)];
        assert!(matches!(compute_impacts(&dup, &mads, &tracts), Err(Error::Tract { .. })));
    }

    #[test]
    fn additivity_over_disjoint_tract_sets() {
        let m = month(2017, 11);
        let mads: BTreeMap<String, f64> = ["a", "b", "c"]
            .iter()
            .map(|k| (k.to_string(), 2.0))
            .collect();
        let set_a = TractCollection::new(vec![tract("a", 100, 10)]).unwrap();
        let set_b = TractCollection::new(vec![tract("b", 300, 30), tract("c", 500, 50)]).unwrap();
        let both = TractCollection::new(vec![tract("a", 100, 10), tract("b", 300, 30), tract("c", 500, 50)]).unwrap();
        let rec_a = vec![record("a", m, Some(0.4), 50.0)];
        let rec_b = vec![record("b", m, Some(0.2), 70.0), record("c", m, Some(0.9), 30.0)];
        let mut all = rec_a.clone();
        all.extend(rec_b.clone());

        let ia = &compute_impacts(&rec_a, &mads, &set_a).unwrap()[0];
        let ib = &compute_impacts(&rec_b, &mads, &set_b).unwrap()[0];
        let iboth = &compute_impacts(&all, &mads, &both).unwrap()[0];
        assert_eq!(iboth.persons_without_power, ia.persons_without_power + ib.persons_without_power);
        assert_eq!(iboth.buildings_lost, ia.buildings_lost + ib.buildings_lost);
        assert_eq!(iboth.persons_uncertainty, ia.persons_uncertainty + ib.persons_uncertainty);
        assert_eq!(iboth.tracts_included, ia.tracts_included + ib.tracts_included);
    }

    #[test]
    fn impact_csv_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("impact.csv");
        let summaries = vec![ImpactSummary {
            month: month(2017, 10),
            persons_without_power: 1234.5,
            persons_uncertainty: 55.25,
            persons_fraction: 0.41,
            buildings_lost: 321.0,
            buildings_uncertainty: 12.125,
            buildings_fraction: 0.3,
            tracts_included: 14,
            tracts_excluded: 2,
            population_excluded: 777,
        }];
        write_impact_csv(&summaries, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "year,month,persons_without_power,persons_uncertainty,persons_fraction,\
             buildings_lost,buildings_uncertainty,buildings_fraction,tracts_included,\
             tracts_excluded,population_excluded\n"
        ));
        let back = read_impact_csv(&path).unwrap();
        assert_eq!(back, summaries);
    }

    fn class_map(classes: &[u8], width: usize) -> ImperviousMap<f64> {
        let g = GridGeometry::new(width, classes.len() / width, 0.0, (classes.len() / width) as f64, 1.0).unwrap();
        let mut r = Raster::masked(g);
        for (i, &c) in classes.iter().enumerate() {
            if c > 0 {
                r.set(i % width, i / width, c as f64).unwrap();
            }
        }
        ImperviousMap::from_raster(r, MapKind::PerImage).unwrap()
    }

    #[test]
    fn allocation_hand_case() {
        // Sizes 1000/2000/1000, n = 400: minimum one each, then 397
        // proportionally (99.25 / 198.5 / 99.25 -> 99/198/99 + 1 to the
        // largest remainder, the middle stratum).
        let alloc = allocate(&[1000, 2000, 1000], 400).unwrap();
        assert_eq!(alloc, vec![100, 200, 100]);
    }

    #[test]
    fn allocation_respects_capacity_and_minimums() {
        // A tiny stratum cannot absorb its proportional share.
        let alloc = allocate(&[2, 1000], 500).unwrap();
        assert_eq!(alloc.iter().sum::<usize>(), 500);
        assert!(alloc[0] >= 1 && alloc[0] <= 2);
        assert!(alloc[1] <= 1000);

        assert!(allocate(&[5, 5, 5], 2).is_err(), "fewer points than strata");
        assert!(allocate(&[5, 5], 11).is_err(), "more points than pixels");

        // Every stratum keeps its minimum even when proportionality
        // would starve it.
        let alloc = allocate(&[1, 1, 1, 1, 996], 10).unwrap();
        assert_eq!(alloc.iter().sum::<usize>(), 10);
        assert!(alloc[..4].iter().all(|&a| a == 1));
        assert_eq!(alloc[4], 6);
    }

    #[test]
    fn single_stratum_sample_draws_distinct_pixels() {
        let map = class_map(&[4; 25], 5);
        let sample = stratified_sample(&map, 5, 99).unwrap();
        assert_eq!(sample.points.len(), 5);
        let mut seen = BTreeSet::new();
        for p in &sample.points {
            assert_eq!(p.stratum, 4);
            assert_eq!(p.reference, 4);
            assert!(p.interpreted.is_none());
            assert!(seen.insert((p.col, p.row)), "duplicate pixel");
        }
        assert_eq!(sample.allocation[3], 5);
    }

    #[test]
    fn sample_points_lie_in_their_strata_and_runs_are_reproducible() {
        let mut classes = Vec::new();
        for i in 0..100u32 {
            classes.push((i % 10 + 1) as u8);
        }
        classes[7] = 0; // one masked pixel
        let map = class_map(&classes, 10);
        let a = stratified_sample(&map, 30, 7).unwrap();
        let b = stratified_sample(&map, 30, 7).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.allocation, b.allocation);
        assert_eq!(a.allocation.iter().sum::<usize>(), 30);
        for p in &a.points {
            assert_eq!(map.class_at(p.col, p.row), Some(p.stratum));
        }
        // Strata emitted in ascending class order.
        let strata: Vec<u8> = a.points.iter().map(|p| p.stratum).collect();
        let mut sorted = strata.clone();
        sorted.sort();
        assert_eq!(strata, sorted);

        let c = stratified_sample(&map, 30, 8).unwrap();
        assert_ne!(
            a.points.iter().map(|p| (p.col, p.row)).collect::<Vec<_>>(),
            c.points.iter().map(|p| (p.col, p.row)).collect::<Vec<_>>(),
            "different seeds should move the draw"
        );
    }

    #[test]
    fn composite_strata_round_to_nearest_class() {
        let g = GridGeometry::new(2, 1, 0.0, 1.0, 1.0).unwrap();
        let mut r = Raster::masked(g);
        r.set(0, 0, 2.4).unwrap();
        r.set(1, 0, 2.6).unwrap();
        let map = ImperviousMap::from_raster(r, MapKind::Composite).unwrap();
        let sample = stratified_sample(&map, 2, 1).unwrap();
        let strata: Vec<u8> = sample.points.iter().map(|p| p.stratum).collect();
        assert_eq!(strata, vec![2, 3]);
    }

    #[test]
    fn accuracy_arithmetic_on_a_large_sample() {
        // 240 agreements out of 264 points.
        let mut points = Vec::new();
        for i in 0..264 {
            let reference = (i % 10 + 1) as u8;
            let interpreted = if i < 240 { reference } else { (reference % 10) + 1 };
            points.push(SamplePoint {
                col: i,
                row: 0,
                x: i as f64 + 0.5,
                y: 0.5,
                stratum: reference,
                reference,
                interpreted: Some(interpreted),
            });
        }
        let report = accuracy(&points).unwrap();
        assert_eq!((report.total, report.correct), (264, 240));
        assert_eq!(report.overall, 240.0 / 264.0);
        assert!((report.overall - 0.909).abs() < 1e-3);
    }

    #[test]
    fn confusion_matches_hand_enumeration() {
        let mk = |reference: u8, interpreted: u8| SamplePoint {
            col: 0,
            row: 0,
            x: 0.5,
            y: 0.5,
            stratum: reference,
            reference,
            interpreted: Some(interpreted),
        };
        let points = vec![
            mk(1, 1),
            mk(1, 2),
            mk(2, 2),
            mk(2, 2),
            mk(3, 1),
            mk(10, 10),
            mk(10, 1),
            mk(5, 5),
            mk(5, 6),
            mk(6, 5),
        ];
        let report = accuracy(&points).unwrap();
        assert_eq!(report.total, 10);
        assert_eq!(report.correct, 5); // (1,1), (2,2) twice, (10,10), (5,5)
        let mut expect = [[0u64; 10]; 10];
        expect[0][0] = 1;
        expect[0][1] = 1;
        expect[1][1] = 2;
        expect[2][0] = 1;
        expect[9][9] = 1;
        expect[9][0] = 1;
        expect[4][4] = 1;
        expect[4][5] = 1;
        expect[5][4] = 1;
        assert_eq!(report.confusion, expect);
    }

    #[test]
    fn unlabeled_point_is_an_error() {
        let points = vec![SamplePoint {
            col: 3,
            row: 4,
            x: 3.5,
            y: 4.5,
            stratum: 2,
            reference: 2,
            interpreted: None,
        }];
        match accuracy(&points) {
            Err(Error::Unlabeled { index, col, row }) => assert_eq!((index, col, row), (0, 3, 4)),
            other => panic!("expected unlabeled error, got {other:?}"),
        }
    }

    #[test]
    fn sample_csv_round_trip_is_byte_stable() {
        let dir = tempdir().unwrap();
        let map = class_map(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 1, 2], 4);
        let sample = stratified_sample(&map, 10, 42).unwrap();
        let path_a = dir.path().join("a.csv");
        let path_b = dir.path().join("b.csv");
        write_sample_csv(&sample.points, &path_a).unwrap();
        let back = read_sample_csv(&path_a).unwrap();
        assert_eq!(back, sample.points);
        write_sample_csv(&back, &path_b).unwrap();
        assert_eq!(std::fs::read(&path_a).unwrap(), std::fs::read(&path_b).unwrap());
    }

    #[test]
    fn monotone_in_any_single_shortfall() {
        let tracts = TractCollection::new(vec![tract("a", 100, 10), tract("b", 200, 20)]).unwrap();
        let m = month(2017, 12);
        let mads: BTreeMap<String, f64> = [("a", 1.0), ("b", 1.0)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let lo = vec![record("a", m, Some(0.2), 50.0), record("b", m, Some(0.3), 50.0)];
        let hi = vec![record("a", m, Some(0.7), 50.0), record("b", m, Some(0.3), 50.0)];
        let ilo = &compute_impacts(&lo, &mads, &tracts).unwrap()[0];
        let ihi = &compute_impacts(&hi, &mads, &tracts).unwrap()[0];
        assert!(ihi.persons_without_power > ilo.persons_without_power);
        assert!(ihi.persons_without_power <= tracts.total_population() as f64);
    }

    #[test]
    fn mad_lookup_maps_ids() {
        let training = MonthRange::new(month(2012, 4), month(2017, 8)).unwrap();
        let model = SeasonalModel {
            tract_id: "x".to_string(),
            training,
            slope: 0.0,
            intercept: 1.0,
            seasonal: [0.0; 12],
            mad: 0.25,
        };
        let map = mad_lookup(&[model]);
        assert_eq!(map.get("x"), Some(&0.25));
    }
}
