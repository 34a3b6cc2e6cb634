//! State boundaries read from a GeoJSON FeatureCollection.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use crate::{Error, Result, StateCode};

/// Closed ring of (lon, lat) points.
pub type Ring = Vec<(f64, f64)>;

/// Polygons, each an outer ring followed by holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry(pub Vec<Vec<Ring>>);

#[derive(Debug, Clone, PartialEq)]
pub struct StateShape {
    pub state: StateCode,
    pub geometry: Geometry,
}

const STATE_KEYS: [&str; 8] = ["state", "code", "STUSPS", "postal", "abbrev", "STATE_ABBR", "name", "NAME"];

fn feature_state(props: &Value) -> Option<StateCode> {
    STATE_KEYS.iter().find_map(|k| {
        let v = props.get(*k)?.as_str()?;
        StateCode::from_abbrev(v).or_else(|| StateCode::from_name(v))
    })
}

fn ring(v: &Value) -> Result<Ring> {
    let bad = || Error::Input("GeoJSON ring is not a list of [lon, lat] pairs".into());
    v.as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|p| {
            let p = p.as_array().ok_or_else(bad)?;
            match (p.first().and_then(Value::as_f64), p.get(1).and_then(Value::as_f64)) {
                (Some(x), Some(y)) => Ok((x, y)),
                _ => Err(bad()),
            }
        })
        .collect()
}

fn polygon(v: &Value) -> Result<Vec<Ring>> {
    v.as_array()
        .ok_or_else(|| Error::Input("GeoJSON polygon is not a list of rings".into()))?
        .iter()
        .map(ring)
        .collect()
}

fn geometry(g: &Value) -> Result<Geometry> {
    let coords = g.get("coordinates").ok_or_else(|| Error::Input("geometry without coordinates".into()))?;
    match g.get("type").and_then(Value::as_str) {
        Some("Polygon") => Ok(Geometry(vec![polygon(coords)?])),
        Some("MultiPolygon") => Ok(Geometry(
            coords
                .as_array()
                .ok_or_else(|| Error::Input("bad MultiPolygon".into()))?
                .iter()
                .map(polygon)
                .collect::<Result<_>>()?,
        )),
        other => Err(Error::Input(format!("unsupported geometry type {other:?}"))),
    }
}

impl StateShape {
    /// Parses a FeatureCollection. Features whose properties do not name a
    /// state are skipped with a warning; a state appearing twice has its
    /// polygons merged.
    pub fn parse_geojson(text: &str) -> Result<Vec<StateShape>> {
        let v: Value = serde_json::from_str(text)?;
        let features = v
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Input("GeoJSON has no `features` array".into()))?;
        let mut out: Vec<StateShape> = Vec::new();
        for (i, f) in features.iter().enumerate() {
            let Some(state) = f.get("properties").and_then(feature_state) else {
                log::warn!("GeoJSON feature {i} does not name a US state; skipped");
                continue;
            };
            let g = geometry(f.get("geometry").unwrap_or(&Value::Null))?;
            match out.iter_mut().find(|s| s.state == state) {
                Some(s) => s.geometry.0.extend(g.0),
                None => out.push(StateShape { state, geometry: g }),
            }
        }
        out.sort_by_key(|s| s.state);
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Vec<StateShape>> {
        Self::parse_geojson(&crate::io::read_to_string(path)?)
    }

    pub fn to_geojson(shapes: &[StateShape]) -> Value {
        let features: Vec<Value> = shapes
            .iter()
            .map(|s| {
                let polys: Vec<Vec<Vec<[f64; 2]>>> = s
                    .geometry
                    .0
                    .iter()
                    .map(|p| p.iter().map(|r| r.iter().map(|&(x, y)| [x, y]).collect()).collect())
                    .collect();
                json!({
                    "type": "Feature",
                    "properties": {"state": s.state.code(), "name": s.state.name()},
                    "geometry": {"type": "MultiPolygon", "coordinates": polys},
                })
            })
            .collect();
        json!({"type": "FeatureCollection", "features": features})
    }
}

/// Equirectangular projection scaled to fit a box.
pub(crate) struct Projection {
    lon0: f64,
    lat1: f64,
    kx: f64,
    scale: f64,
    margin: f64,
}

impl Projection {
    pub(crate) fn fit(shapes: &[StateShape], width: f64, height: f64, margin: f64) -> Projection {
        let pts = shapes.iter().flat_map(|s| s.geometry.0.iter().flatten().flatten());
        let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            lo_x = lo_x.min(x);
            hi_x = hi_x.max(x);
            lo_y = lo_y.min(y);
            hi_y = hi_y.max(y);
        }
        if !lo_x.is_finite() {
            return Projection { lon0: 0.0, lat1: 0.0, kx: 1.0, scale: 1.0, margin };
        }
        let kx = ((lo_y + hi_y) / 2.0).to_radians().cos().max(0.1);
        let w = ((hi_x - lo_x) * kx).max(1e-9);
        let h = (hi_y - lo_y).max(1e-9);
        let scale = ((width - 2.0 * margin) / w).min((height - 2.0 * margin) / h);
        Projection { lon0: lo_x, lat1: hi_y, kx, scale, margin }
    }

    fn point(&self, (lon, lat): (f64, f64)) -> (f64, f64) {
        (self.margin + (lon - self.lon0) * self.kx * self.scale, self.margin + (self.lat1 - lat) * self.scale)
    }

    pub(crate) fn path(&self, g: &Geometry) -> String {
        let mut d = String::new();
        for poly in &g.0 {
            for ring in poly {
                for (i, &p) in ring.iter().enumerate() {
                    let (x, y) = self.point(p);
                    let _ = write!(d, "{}{x:.2},{y:.2}", if i == 0 { "M" } else { "L" });
                }
                d.push('Z');
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_polygon_and_multipolygon() {
        let text = r#"{"type":"FeatureCollection","features":[
          {"type":"Feature","properties":{"name":"Florida"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}},
          {"type":"Feature","properties":{"STUSPS":"TX"},"geometry":{"type":"MultiPolygon","coordinates":[[[[2,0],[3,0],[3,1],[2,0]]],[[[4,0],[5,0],[5,1],[4,0]]]]}},
          {"type":"Feature","properties":{"name":"Ontario"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}}
        ]}"#;
        let shapes = StateShape::parse_geojson(text).unwrap();
        assert_eq!(shapes.len(), 2);
        let tx = shapes.iter().find(|s| s.state.code() == "TX").unwrap();
        assert_eq!(tx.geometry.0.len(), 2);
        let back = StateShape::parse_geojson(&StateShape::to_geojson(&shapes).to_string()).unwrap();
        assert_eq!(back, shapes);
    }
}
