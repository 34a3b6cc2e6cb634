use std::collections::HashMap;
use std::path::Path;

use crate::{Error, Result, StateCode};

const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Shipped list of US places (state capitals and large cities).
pub const BUILTIN_PLACES: &str = include_str!("../../data/us_places.tsv");

#[derive(Debug, Clone, PartialEq)]
pub struct Place {
    /// Case-folded place name.
    pub name: String,
    pub state: StateCode,
    pub latitude: f64,
    pub longitude: f64,
    pub population: u64,
}

/// Great-circle distance in kilometres (haversine).
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

fn cell_of(lat: f64, lon: f64) -> (i32, i32) {
    (lat.floor() as i32, wrap_lon_cell(lon.floor() as i32))
}

fn wrap_lon_cell(c: i32) -> i32 {
    (c + 180).rem_euclid(360) - 180
}

/// Immutable place table with a name index and a 1°×1° grid index.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    places: Vec<Place>,
    by_name: HashMap<String, Vec<usize>>,
    grid: HashMap<(i32, i32), Vec<usize>>,
}

impl Gazetteer {
    pub fn new(places: Vec<Place>) -> Self {
        let mut by_name: HashMap<String, Vec<usize>> = HashMap::new();
        let mut grid: HashMap<(i32, i32), Vec<usize>> = HashMap::new();
        for (i, p) in places.iter().enumerate() {
            by_name.entry(p.name.clone()).or_default().push(i);
            grid.entry(cell_of(p.latitude, p.longitude)).or_default().push(i);
        }
        Gazetteer { places, by_name, grid }
    }

    /// Parses tab-separated `name, state, latitude, longitude, population`.
    /// Lines starting with `#` and a leading `name` header are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut places = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if lineno == 0 && cols[0].eq_ignore_ascii_case("name") {
                continue;
            }
            let bad = |what: &str| Error::Input(format!("gazetteer line {}: {what}", lineno + 1));
            if cols.len() < 5 {
                return Err(bad("expected 5 tab-separated columns"));
            }
            let state = StateCode::from_abbrev(cols[1]).ok_or_else(|| bad("unknown state code"))?;
            let latitude: f64 = cols[2].trim().parse().map_err(|_| bad("bad latitude"))?;
            let longitude: f64 = cols[3].trim().parse().map_err(|_| bad("bad longitude"))?;
            if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
                return Err(bad("coordinates out of range"));
            }
            let population: u64 = cols[4].trim().parse().map_err(|_| bad("bad population"))?;
            places.push(Place { name: normalize_name(cols[0]), state, latitude, longitude, population });
        }
        Ok(Gazetteer::new(places))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&crate::io::read_to_string(path)?)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_PLACES).expect("shipped gazetteer parses")
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    /// States containing a place with this (case-folded) name, sorted, deduplicated.
    pub fn states_for_name(&self, name: &str) -> Vec<StateCode> {
        let mut states: Vec<StateCode> =
            self.by_name.get(name).map(|ix| ix.iter().map(|&i| self.places[i].state).collect()).unwrap_or_default();
        states.sort();
        states.dedup();
        states
    }

    pub fn has_place_in(&self, name: &str, state: StateCode) -> bool {
        self.by_name.get(name).is_some_and(|ix| ix.iter().any(|&i| self.places[i].state == state))
    }

    /// Nearest place within `radius_km`. Ties on distance go to the larger
    /// population, then to the earlier entry.
    pub fn nearest(&self, lat: f64, lon: f64, radius_km: f64) -> Option<&Place> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) || !(radius_km >= 0.0) {
            return None;
        }
        let mut best: Option<(f64, usize)> = None;
        for i in self.candidates(lat, lon, radius_km) {
            let p = &self.places[i];
            let d = haversine_km(lat, lon, p.latitude, p.longitude);
            if d > radius_km {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bi)) => {
                    d < bd
                        || (d == bd
                            && (p.population > self.places[bi].population
                                || (p.population == self.places[bi].population && i < bi)))
                }
            };
            if better {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| &self.places[i])
    }

    /// Indices of places in grid cells that may lie within the radius.
    fn candidates(&self, lat: f64, lon: f64, radius_km: f64) -> Vec<usize> {
        let ang = radius_km / EARTH_RADIUS_KM;
        let dlat = ang.to_degrees();
        // one spare cell on each side absorbs rounding at cell edges
        let lat_lo = ((lat - dlat).floor() as i32 - 1).max(-91);
        let lat_hi = ((lat + dlat).floor() as i32 + 1).min(90);
        let max_abs_lat = (lat.abs() + dlat).min(90.0);
        let ratio = ang.sin() / max_abs_lat.to_radians().cos();
        let lon_cells: Vec<i32> = if ang >= std::f64::consts::FRAC_PI_2 || ratio >= 1.0 || max_abs_lat >= 89.0 {
            (-180..180).collect()
        } else {
            let dlon = ratio.asin().to_degrees();
            let lo = (lon - dlon).floor() as i32 - 1;
            let hi = (lon + dlon).floor() as i32 + 1;
            if hi - lo >= 359 {
                (-180..180).collect()
            } else {
                (lo..=hi).map(wrap_lon_cell).collect()
            }
        };
        let mut out = Vec::new();
        for la in lat_lo..=lat_hi {
            for &lo in &lon_cells {
                if let Some(ix) = self.grid.get(&(la, lo)) {
                    out.extend_from_slice(ix);
                }
            }
        }
        out
    }
}

/// Lowercases, turns `.` and `_` into spaces, and collapses whitespace.
pub fn normalize_name(s: &str) -> String {
    s.to_lowercase().replace(['.', '_'], " ").split_whitespace().collect::<Vec<_>>().join(" ")
}
