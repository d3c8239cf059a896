//! Census tract polygons with population and building attributes.
//!
//! Tracts travel as a GeoJSON FeatureCollection of Polygon features in
//! planar map coordinates (the raster coordinate system, not lon/lat).
//! Required properties: `tract_id` (string or integer), `population`,
//! `building_count` (nonnegative integers).

use std::collections::BTreeSet;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// One tract: an outer ring, optional hole rings, and census attributes.
///
/// Rings are stored open (no repeated closing vertex), at least three
/// vertices each, all coordinates finite.
#[derive(Clone, Debug, PartialEq)]
pub struct TractPolygon {
    pub tract_id: String,
    pub population: u64,
    pub building_count: u64,
    /// `rings[0]` is the outer ring; the rest are holes.
    pub rings: Vec<Vec<(f64, f64)>>,
}

impl TractPolygon {
    pub fn new(tract_id: String, population: u64, building_count: u64, rings: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        if rings.is_empty() {
            return Err(Error::Tract {
                tract_id,
                detail: "polygon has no rings".to_string(),
            });
        }
        let mut normalized = Vec::with_capacity(rings.len());
        for mut ring in rings {
            // Accept explicitly closed rings by dropping the repeated vertex.
            if ring.len() >= 2 && ring.first() == ring.last() {
                ring.pop();
            }
            if ring.len() < 3 {
                return Err(Error::Tract {
                    tract_id,
                    detail: format!("degenerate ring with {} distinct vertices", ring.len()),
                });
            }
            if ring.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                return Err(Error::Tract {
                    tract_id,
                    detail: "ring has non-finite coordinates".to_string(),
                });
            }
            normalized.push(ring);
        }
        Ok(TractPolygon {
            tract_id,
            population,
            building_count,
            rings: normalized,
        })
    }

    pub fn outer(&self) -> &[(f64, f64)] {
        &self.rings[0]
    }

    pub fn holes(&self) -> &[Vec<(f64, f64)>] {
        &self.rings[1..]
    }
}

/// An ordered set of tracts with unique ids.
#[derive(Clone, Debug, Default)]
pub struct TractCollection {
    tracts: Vec<TractPolygon>,
}

impl TractCollection {
    pub fn new(tracts: Vec<TractPolygon>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (i, t) in tracts.iter().enumerate() {
            if !seen.insert(t.tract_id.as_str()) {
                return Err(Error::Feature {
                    index: i,
                    detail: format!("duplicate tract_id '{}'", t.tract_id),
                });
            }
        }
        Ok(TractCollection { tracts })
    }

    pub fn iter(&self) -> impl Iterator<Item = &TractPolygon> {
        self.tracts.iter()
    }

    pub fn len(&self) -> usize {
        self.tracts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracts.is_empty()
    }

    pub fn get(&self, tract_id: &str) -> Option<&TractPolygon> {
        self.tracts.iter().find(|t| t.tract_id == tract_id)
    }

    pub fn total_population(&self) -> u64 {
        self.tracts.iter().map(|t| t.population).sum()
    }

    pub fn total_buildings(&self) -> u64 {
        self.tracts.iter().map(|t| t.building_count).sum()
    }
}

fn feature_err(index: usize, detail: impl Into<String>) -> Error {
    Error::Feature {
        index,
        detail: detail.into(),
    }
}

fn property_u64(props: &Map<String, Value>, key: &str, index: usize) -> Result<u64> {
    let v = props
        .get(key)
        .ok_or_else(|| feature_err(index, format!("missing property '{key}'")))?;
    v.as_u64()
        .ok_or_else(|| feature_err(index, format!("property '{key}' = {v} is not a nonnegative integer")))
}

fn ring_from_json(ring: &Value, index: usize) -> Result<Vec<(f64, f64)>> {
    let coords = ring
        .as_array()
        .ok_or_else(|| feature_err(index, "ring is not an array"))?;
    coords
        .iter()
        .map(|pt| {
            let pair = pt.as_array().filter(|p| p.len() >= 2);
            let pair = pair.ok_or_else(|| feature_err(index, format!("vertex {pt} is not an [x, y] pair")))?;
            match (pair[0].as_f64(), pair[1].as_f64()) {
                (Some(x), Some(y)) => Ok((x, y)),
                _ => Err(feature_err(index, format!("vertex {pt} has non-numeric coordinates"))),
            }
        })
        .collect()
}

/// Read a GeoJSON FeatureCollection of tract polygons.
pub fn read_tracts(path: &Path) -> Result<TractCollection> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root: Value =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, format!("line {}", e.line()), e.to_string()))?;

    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::parse(path, "document", "expected a GeoJSON FeatureCollection"));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse(path, "document", "FeatureCollection has no features array"))?;

    let mut tracts = Vec::with_capacity(features.len());
    for (index, feature) in features.iter().enumerate() {
        let props = feature
            .get("properties")
            .and_then(Value::as_object)
            .ok_or_else(|| feature_err(index, "missing properties object"))?;
        let tract_id = match props.get("tract_id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            Some(other) => return Err(feature_err(index, format!("property 'tract_id' = {other} is not text"))),
            None => return Err(feature_err(index, "missing property 'tract_id'")),
        };
        let population = property_u64(props, "population", index)?;
        let building_count = property_u64(props, "building_count", index)?;

        let geometry = feature
            .get("geometry")
            .and_then(Value::as_object)
            .ok_or_else(|| feature_err(index, "missing geometry"))?;
        let gtype = geometry.get("type").and_then(Value::as_str).unwrap_or("<none>");
        if gtype != "Polygon" {
            return Err(feature_err(index, format!("geometry type '{gtype}' is not Polygon")));
        }
        let rings_json = geometry
            .get("coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| feature_err(index, "Polygon has no coordinates"))?;
        let rings = rings_json
            .iter()
            .map(|r| ring_from_json(r, index))
            .collect::<Result<Vec<_>>>()?;

        tracts.push(TractPolygon::new(tract_id, population, building_count, rings)?);
    }
    TractCollection::new(tracts)
}

/// Write tracts as a GeoJSON FeatureCollection (rings explicitly closed).
pub fn write_tracts(tracts: &TractCollection, path: &Path) -> Result<()> {
    let features: Vec<Value> = tracts
        .iter()
        .map(|t| {
            let rings: Vec<Value> = t
                .rings
                .iter()
                .map(|ring| {
                    let mut pts: Vec<Value> = ring.iter().map(|(x, y)| json!([x, y])).collect();
                    pts.push(json!([ring[0].0, ring[0].1]));
                    Value::Array(pts)
                })
                .collect();
            json!({
                "type": "Feature",
                "properties": {
                    "tract_id": t.tract_id,
                    "population": t.population,
                    "building_count": t.building_count,
                },
                "geometry": { "type": "Polygon", "coordinates": rings },
            })
        })
        .collect();
    let doc = json!({ "type": "FeatureCollection", "features": features });
    let text = serde_json::to_string_pretty(&doc).expect("geojson serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Export tract attributes as CSV: `tract_id,population,building_count`,
/// sorted by tract_id.
pub fn write_census_csv(tracts: &TractCollection, path: &Path) -> Result<()> {
    let mut rows: Vec<&TractPolygon> = tracts.iter().collect();
    rows.sort_by(|a, b| a.tract_id.cmp(&b.tract_id));
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["tract_id", "population", "building_count"])
        .map_err(|e| csv_error(path, e))?;
    for t in rows {
        w.write_record([&t.tract_id, &t.population.to_string(), &t.building_count.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let location = e
        .position()
        .map(|p| format!("line {}", p.line()))
        .unwrap_or_else(|| "file".to_string());
    Error::parse(path, location, e.to_string())
}
