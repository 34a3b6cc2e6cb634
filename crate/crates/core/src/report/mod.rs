//! Choropleth SVGs and word-cloud size tables.

mod geometry;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use geometry::{Geometry, Ring, StateShape};

use crate::topicmodel::TopicWords;
use crate::{Error, Result, StateCode};

/// Light and dark ends of the single-hue ramp.
pub const RAMP_LOW: [u8; 3] = [239, 243, 255];
pub const RAMP_HIGH: [u8; 3] = [8, 48, 107];
pub const NEUTRAL_FILL: &str = "#d9d9d9";

const WIDTH: f64 = 960.0;
const MAP_HEIGHT: f64 = 560.0;
const LEGEND_HEIGHT: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choropleth {
    pub title: String,
    pub values: BTreeMap<StateCode, f64>,
    /// Fixed scale bounds; observed min/max are used when absent.
    pub scale_min: Option<f64>,
    pub scale_max: Option<f64>,
}

impl Choropleth {
    pub fn new(title: impl Into<String>, values: BTreeMap<StateCode, f64>) -> Self {
        Choropleth { title: title.into(), values, scale_min: None, scale_max: None }
    }

    pub fn with_scale(mut self, min: f64, max: f64) -> Self {
        self.scale_min = Some(min);
        self.scale_max = Some(max);
        self
    }

    pub fn bounds(&self) -> (f64, f64) {
        let observed_min = self.values.values().copied().fold(f64::INFINITY, f64::min);
        let observed_max = self.values.values().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.scale_min.unwrap_or(if observed_min.is_finite() { observed_min } else { 0.0 });
        let max = self.scale_max.unwrap_or(if observed_max.is_finite() { observed_max } else { 0.0 });
        (min, max)
    }

    /// Ramp position in [0, 1]. When min = max every state sits at the
    /// middle of the ramp.
    pub fn intensity(&self, value: f64) -> f64 {
        let (min, max) = self.bounds();
        if max <= min {
            0.5
        } else {
            ((value - min) / (max - min)).clamp(0.0, 1.0)
        }
    }
}

pub fn ramp_color(intensity: f64) -> String {
    let t = intensity.clamp(0.0, 1.0);
    let c: Vec<u8> =
        RAMP_LOW.iter().zip(RAMP_HIGH).map(|(&a, b)| (a as f64 + (b as f64 - a as f64) * t).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Result of rendering: the SVG text and the states present in the values
/// but missing from the geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub svg: String,
    pub missing_geometry: Vec<StateCode>,
}

pub fn render_choropleth(map: &Choropleth, shapes: &[StateShape]) -> Rendered {
    let missing_geometry: Vec<StateCode> =
        map.values.keys().filter(|s| !shapes.iter().any(|sh| sh.state == **s)).copied().collect();
    for s in &missing_geometry {
        log::warn!("no geometry for state {s}; skipped");
    }
    let project = geometry::Projection::fit(shapes, WIDTH, MAP_HEIGHT, 10.0);
    let mut svg = String::new();
    let total_h = MAP_HEIGHT + LEGEND_HEIGHT;
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{total_h}" viewBox="0 0 {WIDTH} {total_h}">"#
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(&map.title));
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(svg, r##"<g stroke="#ffffff" stroke-width="0.6">"##);
    for shape in shapes {
        let (fill, label) = match map.values.get(&shape.state) {
            Some(&v) => (ramp_color(map.intensity(v)), format!("{}: {v}", shape.state.code())),
            None => (NEUTRAL_FILL.to_string(), format!("{}: no data", shape.state.code())),
        };
        let d = project.path(&shape.geometry);
        let _ = writeln!(
            svg,
            r#"<path id="{}" fill="{fill}" d="{d}"><title>{}</title></path>"#,
            shape.state.code(),
            escape(&label)
        );
    }
    svg.push_str("</g>\n");
    let (min, max) = map.bounds();
    let y = MAP_HEIGHT + 10.0;
    let _ = writeln!(
        svg,
        r#"<defs><linearGradient id="ramp" x1="0" x2="1" y1="0" y2="0"><stop offset="0" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>"#,
        ramp_color(0.0),
        ramp_color(1.0)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="20" y="{y}" width="300" height="16" fill="url(#ramp)" stroke="#999999" stroke-width="0.5"/>"##
    );
    let ty = y + 32.0;
    let _ = writeln!(svg, r#"<text x="20" y="{ty}" font-family="sans-serif" font-size="12">{}</text>"#, fmt_value(min));
    let _ = writeln!(
        svg,
        r#"<text x="320" y="{ty}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
        fmt_value(max)
    );
    let _ = writeln!(
        svg,
        r#"<text x="340" y="{}" font-family="sans-serif" font-size="14">{}</text>"#,
        y + 13.0,
        escape(&map.title)
    );
    svg.push_str("</svg>\n");
    Rendered { svg, missing_geometry }
}

fn fmt_value(v: f64) -> String {
    format!("{v:.4}")
}

/// Reads `state,value` rows (extra columns ignored).
pub fn read_values(path: &Path) -> Result<BTreeMap<StateCode, f64>> {
    read_column(path, "value", None)
}

/// Reads `state` and `value_col`, keeping rows whose `filter` column equals
/// the given value when a filter is set.
pub fn read_column(path: &Path, value_col: &str, filter: Option<(&str, &str)>) -> Result<BTreeMap<StateCode, f64>> {
    let mut rdr = crate::io::csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Input(format!("{}: missing column `{name}`", path.display())))
    };
    let (sc, vc) = (col("state")?, col(value_col)?);
    let filter = match filter {
        Some((c, v)) => Some((col(c)?, v)),
        None => None,
    };
    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        if let Some((fc, fv)) = filter {
            if row.get(fc) != Some(fv) {
                continue;
            }
        }
        let state: StateCode = row.get(sc).unwrap_or_default().parse()?;
        let value: f64 = row
            .get(vc)
            .unwrap_or_default()
            .parse()
            .map_err(|_| Error::Input(format!("{}: bad value for {state}", path.display())))?;
        out.insert(state, value);
    }
    Ok(out)
}

pub fn write_values(path: &Path, values: &BTreeMap<StateCode, f64>) -> Result<()> {
    let mut w = crate::io::csv_writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(["state", "value"]).map_err(err)?;
    for (s, v) in values {
        w.write_record([s.code().to_string(), v.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_svg(path: &Path, rendered: &Rendered) -> Result<()> {
    use std::io::Write;
    let mut w = crate::io::create_writer(path)?;
    w.write_all(rendered.svg.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudWord {
    pub word: String,
    pub probability: f64,
    /// Probability relative to the largest one.
    pub size: f64,
}

pub fn render_wordcloud_data(words: &[(String, f64)]) -> Result<Vec<CloudWord>> {
    let max = words.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
    if words.is_empty() || !(max > 0.0) {
        return Err(Error::Input("word cloud needs at least one word with positive probability".into()));
    }
    Ok(words.iter().map(|(w, p)| CloudWord { word: w.clone(), probability: *p, size: p / max }).collect())
}

/// Writes `topic,word,probability,size` rows, optionally limiting words per
/// topic.
pub fn write_wordcloud(path: &Path, topics: &[TopicWords], limit: Option<usize>) -> Result<()> {
    let mut w = crate::io::csv_writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(["topic", "word", "probability", "size"]).map_err(err)?;
    for t in topics {
        let n = limit.unwrap_or(t.words.len()).min(t.words.len());
        let pairs: Vec<(String, f64)> = t.words[..n].iter().map(|x| (x.word.clone(), x.weight)).collect();
        for c in render_wordcloud_data(&pairs)? {
            w.write_record([t.topic.to_string(), c.word, c.probability.to_string(), c.size.to_string()])
                .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(c: &str) -> StateCode {
        StateCode::from_abbrev(c).unwrap()
    }

    fn square(state: &str, x: f64, y: f64) -> StateShape {
        StateShape {
            state: st(state),
            geometry: Geometry(vec![vec![vec![(x, y), (x + 1.0, y), (x + 1.0, y + 1.0), (x, y + 1.0), (x, y)]]]),
        }
    }

    #[test]
    fn explicit_scale() {
        let m = Choropleth::new("t", BTreeMap::from([(st("FL"), 0.5), (st("TX"), 0.25)])).with_scale(0.0, 0.5);
        assert_eq!(m.intensity(0.5), 1.0);
        assert_eq!(m.intensity(0.25), 0.5);
    }

    #[test]
    fn constant_values_uniform() {
        let m = Choropleth::new("t", BTreeMap::from([(st("FL"), 0.3), (st("TX"), 0.3)]));
        let shapes = [square("FL", 0.0, 0.0), square("TX", 2.0, 0.0), square("OH", 4.0, 0.0)];
        let r = render_choropleth(&m, &shapes);
        assert_eq!(r.svg.matches(&format!(r#"fill="{}""#, ramp_color(0.5))).count(), 2);
        assert_eq!(r.svg.matches(NEUTRAL_FILL).count(), 1);
        assert!(!r.svg.contains("NaN"));
    }

    #[test]
    fn one_saturated_state() {
        let m = Choropleth::new("t", BTreeMap::from([(st("FL"), 9.0), (st("TX"), 1.0), (st("OH"), 1.0)]));
        let shapes = [square("FL", 0.0, 0.0), square("TX", 2.0, 0.0), square("OH", 4.0, 0.0)];
        let r = render_choropleth(&m, &shapes);
        assert_eq!(r.svg.matches(&format!(r#"fill="{}""#, ramp_color(1.0))).count(), 1);
        assert_eq!(r.svg, render_choropleth(&m, &shapes).svg);
    }

    #[test]
    fn missing_geometry_reported() {
        let m = Choropleth::new("t", BTreeMap::from([(st("FL"), 1.0), (st("AK"), 2.0)]));
        let r = render_choropleth(&m, &[square("FL", 0.0, 0.0)]);
        assert_eq!(r.missing_geometry, [st("AK")]);
    }

    #[test]
    fn ramp_monotone() {
        let lum = |c: &str| {
            let v = u32::from_str_radix(&c[1..], 16).unwrap();
            (v >> 16) + ((v >> 8) & 255) + (v & 255)
        };
        let mut prev = u32::MAX;
        for i in 0..=100 {
            let l = lum(&ramp_color(i as f64 / 100.0));
            assert!(l <= prev);
            prev = l;
        }
    }

    #[test]
    fn wordcloud_sizes() {
        let c = render_wordcloud_data(&[("a".into(), 0.2), ("b".into(), 0.1)]).unwrap();
        assert_eq!(c.iter().map(|w| w.size).collect::<Vec<_>>(), [1.0, 0.5]);
        assert_eq!(render_wordcloud_data(&[("a".into(), 0.01)]).unwrap()[0].size, 1.0);
        assert!(render_wordcloud_data(&[]).is_err());
    }
}
