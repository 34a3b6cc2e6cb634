//! Resolving messages to a US state from coordinates, a tagged place, or a
//! free-text profile location, tried in that order.

mod gazetteer;

use serde::{Deserialize, Serialize};

pub use gazetteer::{haversine_km, normalize_name, Gazetteer, Place, BUILTIN_PLACES};

use crate::ingest::CleanMessage;
use crate::StateCode;

pub const DEFAULT_RADIUS_KM: f64 = 100.0;

/// Which hint produced a resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Coordinates,
    Place,
    UserLocation,
}

#[derive(Debug, Clone)]
pub struct Geocoder {
    gazetteer: Gazetteer,
    radius_km: f64,
}

/// Per-tier resolution counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeocodeStats {
    pub total: usize,
    pub coordinates: usize,
    pub place: usize,
    pub user_location: usize,
    pub unresolved: usize,
}

impl Geocoder {
    pub fn new(gazetteer: Gazetteer) -> Self {
        Geocoder { gazetteer, radius_km: DEFAULT_RADIUS_KM }
    }

    pub fn with_radius_km(mut self, radius_km: f64) -> Self {
        self.radius_km = radius_km;
        self
    }

    pub fn gazetteer(&self) -> &Gazetteer {
        &self.gazetteer
    }

    pub fn reverse_geocode(&self, lat: f64, lon: f64) -> Option<StateCode> {
        self.gazetteer.nearest(lat, lon, self.radius_km).map(|p| p.state)
    }

    pub fn text_resolve(&self, location: &str) -> Option<StateCode> {
        text_resolve(location, &self.gazetteer)
    }

    /// Tries coordinates, then the tagged place, then the user location.
    pub fn resolve_hints(
        &self,
        coordinates: Option<(f64, f64)>,
        place_name: Option<&str>,
        user_location: Option<&str>,
    ) -> Option<(StateCode, Tier)> {
        if let Some(s) = coordinates.and_then(|(lat, lon)| self.reverse_geocode(lat, lon)) {
            return Some((s, Tier::Coordinates));
        }
        if let Some(s) = place_name.and_then(|p| self.text_resolve(p)) {
            return Some((s, Tier::Place));
        }
        user_location.and_then(|u| self.text_resolve(u)).map(|s| (s, Tier::UserLocation))
    }

    pub fn resolve(&self, msg: &CleanMessage) -> Option<(StateCode, Tier)> {
        self.resolve_hints(msg.coordinates(), msg.place_name.as_deref(), msg.user_location.as_deref())
    }

    /// Fills in `state` on every message and tallies the tiers used.
    pub fn geocode_corpus(&self, corpus: &mut [CleanMessage]) -> GeocodeStats {
        use rayon::prelude::*;
        let resolved: Vec<_> = corpus.par_iter().map(|m| self.resolve(m)).collect();
        let mut stats = GeocodeStats { total: corpus.len(), ..Default::default() };
        for (m, r) in corpus.iter_mut().zip(resolved) {
            m.state = r.map(|(s, _)| s);
            match r.map(|(_, t)| t) {
                Some(Tier::Coordinates) => stats.coordinates += 1,
                Some(Tier::Place) => stats.place += 1,
                Some(Tier::UserLocation) => stats.user_location += 1,
                None => stats.unresolved += 1,
            }
        }
        stats
    }
}

const COUNTRY_WORDS: [&str; 6] = ["usa", "us", "u s a", "u s", "united states", "united states of america"];

fn is_country(seg: &str) -> bool {
    COUNTRY_WORDS.contains(&seg)
}

/// A segment naming a state by abbreviation (`fl`, `f.l.`) or full name.
fn state_of_segment(seg: &str) -> Option<StateCode> {
    let compact: String = seg.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.len() == 2 {
        if let Some(s) = StateCode::from_abbrev(&compact) {
            return Some(s);
        }
    }
    if seg == "washington dc" || seg == "d c" {
        return StateCode::from_abbrev("DC");
    }
    StateCode::from_name(seg)
}

/// Splits on commas, normalizing each piece and dropping empty ones and a
/// trailing country name.
fn segments(text: &str) -> Vec<String> {
    let mut segs: Vec<String> = text
        .split([',', '|', ';', '/'])
        .map(|s| {
            let cleaned: String = s.chars().map(|c| if c.is_alphanumeric() || c == '\'' { c } else { ' ' }).collect();
            normalize_name(&cleaned)
        })
        .filter(|s| !s.is_empty())
        .collect();
    while segs.len() > 1 && segs.last().is_some_and(|s| is_country(s)) {
        segs.pop();
    }
    segs
}

/// Resolves a free-text location, trying in order:
/// (a) `city, state` (or `city state`) where the city exists in that state;
/// (b) exactly one state named by full name or standalone abbreviation;
/// (c) a bare city name that exists in exactly one state.
pub fn text_resolve(location: &str, gaz: &Gazetteer) -> Option<StateCode> {
    let segs = segments(location);
    if segs.is_empty() {
        return None;
    }

    // (a) city followed by its state
    for pair in segs.windows(2) {
        if let Some(state) = leading_state(&pair[1]) {
            if gaz.has_place_in(&pair[0], state) {
                return Some(state);
            }
        }
    }
    for seg in &segs {
        let words: Vec<&str> = seg.split(' ').collect();
        for split in 1..words.len() {
            let (city, st) = words.split_at(split);
            if let Some(state) = state_of_segment(&st.join(" ")) {
                if gaz.has_place_in(&city.join(" "), state) {
                    return Some(state);
                }
            }
        }
    }

    // (b) state names anywhere, abbreviations only as whole segments or as
    // capitalized tokens in mixed-case text
    let mut found: Vec<StateCode> = Vec::new();
    for seg in &segs {
        if let Some(s) = state_of_segment(seg) {
            found.push(s);
            continue;
        }
        // `kansas city` names a place, not the state
        if gaz.states_for_name(seg).is_empty() {
            found.extend(states_named_in(seg));
        }
    }
    if location.chars().any(|c| c.is_lowercase()) {
        for tok in location.split(|c: char| !c.is_alphanumeric()) {
            if tok.len() == 2 && tok.chars().all(|c| c.is_ascii_uppercase()) {
                if let Some(s) = StateCode::from_abbrev(tok) {
                    found.push(s);
                }
            }
        }
    }
    found.sort();
    found.dedup();
    if found.len() == 1 {
        return found.pop();
    }
    if found.len() > 1 {
        return None;
    }

    // (c) unambiguous bare city
    if segs.len() == 1 {
        let states = gaz.states_for_name(&segs[0]);
        if states.len() == 1 {
            return Some(states[0]);
        }
    }
    None
}

/// State at the start of a segment such as `fl 32601` or `florida`.
fn leading_state(seg: &str) -> Option<StateCode> {
    if let Some(s) = state_of_segment(seg) {
        return Some(s);
    }
    let words: Vec<&str> = seg.split(' ').collect();
    (1..words.len()).rev().find_map(|n| state_of_segment(&words[..n].join(" ")))
}

/// Full state names occurring as whole-word sequences, longest match first
/// so `west virginia` does not also yield `virginia`.
fn states_named_in(seg: &str) -> Vec<StateCode> {
    let words: Vec<&str> = seg.split(' ').collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let mut matched = 0;
        for len in (1..=4.min(words.len() - i)).rev() {
            let phrase = words[i..i + len].join(" ");
            let hit =
                if phrase == "washington dc" { StateCode::from_abbrev("DC") } else { StateCode::from_name(&phrase) };
            if let Some(s) = hit {
                out.push(s);
                matched = len;
                break;
            }
        }
        i += matched.max(1);
    }
    out
}
