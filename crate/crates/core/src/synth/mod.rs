//! Synthetic corpora and survey files with known ground truth.
//!
//! Documents follow the LDA generative process. Each state carries a topic
//! tilt and each month a second tilt shared by both message classes, so
//! state-level prevalence and monthly volumes both have planted structure.

mod tiles;

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

pub use tiles::tile_grid;

use crate::analytics::spearman;
use crate::classify::{classify_features, MessageClass, MessageFeatures};
use crate::geocode::Gazetteer;
use crate::report::StateShape;
use crate::survey::{QuestionGroups, SurveyRespondent};
use crate::topicmodel::{cosine, LdaModel};
use crate::{Error, Result, StateCode};

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoMix {
    pub coordinates: f64,
    pub place: f64,
    pub user_location: f64,
    pub unresolvable: f64,
}

impl Default for GeoMix {
    fn default() -> Self {
        GeoMix { coordinates: 0.3, place: 0.25, user_location: 0.35, unresolvable: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseMix {
    /// Share of retained records replayed verbatim in a second file.
    pub duplicate_share: f64,
    /// Extra records without any collection keyword.
    pub irrelevant_share: f64,
    /// Extra non-English records.
    pub non_english_share: f64,
}

impl Default for NoiseMix {
    fn default() -> Self {
        NoiseMix { duplicate_share: 0.05, irrelevant_share: 0.02, non_english_share: 0.02 }
    }
}

/// Generator parameters, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub k: usize,
    pub v: usize,
    pub d: usize,
    pub mean_doc_len: f64,
    /// Per-topic Dirichlet concentration for document mixtures.
    pub alpha: f64,
    /// Mass spread uniformly over the whole vocabulary in every topic.
    pub topic_noise: f64,
    pub promotional_share: f64,
    /// Scale of the per-state topic tilt.
    pub state_tilt: f64,
    /// Scale of the per-month topic tilt.
    pub time_tilt: f64,
    pub start_month: String,
    pub months: usize,
    /// θ threshold used for the true state-level prevalence.
    pub prevalence_cutoff: f64,
    /// Relative state weights by abbreviation; uniform when empty.
    pub state_weights: BTreeMap<String, f64>,
    /// Word placed in every relevant message so it passes keyword filtering.
    pub marker: String,
    pub geo: GeoMix,
    pub noise: NoiseMix,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 1,
            k: 10,
            v: 500,
            d: 10_000,
            mean_doc_len: 15.0,
            alpha: 0.1,
            topic_noise: 0.05,
            promotional_share: 0.72,
            state_tilt: 1.5,
            time_tilt: 0.5,
            start_month: "2016-01".into(),
            months: 24,
            prevalence_cutoff: 0.15,
            state_weights: BTreeMap::new(),
            marker: "hpv".into(),
            geo: GeoMix::default(),
            noise: NoiseMix::default(),
        }
    }
}

impl SynthSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: SynthSpec = toml::from_str(text).map_err(|e| Error::Config(format!("synth spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&crate::io::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synth spec: {m}")));
        if self.k == 0 || self.v < self.k || self.d == 0 {
            return bad("need k ≥ 1, v ≥ k and d ≥ 1");
        }
        if !(self.mean_doc_len >= 1.0) || !(self.alpha > 0.0) {
            return bad("mean_doc_len must be ≥ 1 and alpha > 0");
        }
        if !(0.0..1.0).contains(&self.topic_noise) || !(0.0..=1.0).contains(&self.promotional_share) {
            return bad("topic_noise must be in [0, 1) and promotional_share in [0, 1]");
        }
        if !(self.prevalence_cutoff > 0.0 && self.prevalence_cutoff < 1.0) {
            return bad("prevalence_cutoff must be in (0, 1)");
        }
        if self.months == 0 || NaiveDate::parse_from_str(&format!("{}-01", self.start_month), "%Y-%m-%d").is_err() {
            return bad("start_month must be YYYY-MM and months ≥ 1");
        }
        for (s, w) in &self.state_weights {
            if StateCode::from_abbrev(s).is_none() || !(*w >= 0.0) {
                return bad(&format!("bad state weight {s} = {w}"));
            }
        }
        let g = &self.geo;
        if [g.coordinates, g.place, g.user_location, g.unresolvable].iter().any(|x| !(*x >= 0.0))
            || g.coordinates + g.place + g.user_location + g.unresolvable <= 0.0
        {
            return bad("geo mix weights must be non-negative with a positive sum");
        }
        let n = &self.noise;
        if [n.duplicate_share, n.irrelevant_share, n.non_english_share].iter().any(|x| !(0.0..=1.0).contains(x)) {
            return bad("noise shares must be in [0, 1]");
        }
        if self.marker.trim().is_empty() {
            return bad("marker must be non-empty");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintKind {
    Coordinates,
    Place,
    UserLocation,
    Unresolvable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthMessage {
    pub id: String,
    pub class: MessageClass,
    pub state: StateCode,
    pub hint: HintKind,
    pub month: String,
    pub theta: Vec<f64>,
    pub has_url: bool,
    pub is_quote: bool,
    pub is_retweet: bool,
}

impl TruthMessage {
    pub fn resolvable(&self) -> bool {
        self.hint != HintKind::Unresolvable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    pub words: Vec<String>,
    /// K × V, rows sum to 1.
    pub phi: Vec<Vec<f64>>,
    pub state_tilts: BTreeMap<StateCode, Vec<f64>>,
    pub month_tilts: BTreeMap<String, Vec<f64>>,
    pub messages: Vec<TruthMessage>,
    /// Per state, the share of resolvable consumer messages whose true θ_k
    /// reaches the prevalence cutoff.
    pub state_topic_prevalence: BTreeMap<StateCode, Vec<f64>>,
}

impl GroundTruth {
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    pub fn prevalence(&self, topic: usize) -> BTreeMap<StateCode, f64> {
        self.state_topic_prevalence.iter().map(|(s, v)| (*s, v[topic])).collect()
    }

    pub fn class_share(&self, class: MessageClass) -> f64 {
        self.messages.iter().filter(|m| m.class == class).count() as f64 / self.messages.len().max(1) as f64
    }
}

/// Input line in the same shape real records use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthRecord {
    pub id: String,
    pub text: String,
    pub lang: String,
    pub created_at: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub longitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub place_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub user_location: Option<String>,
    pub is_quote: bool,
    pub is_retweet: bool,
    pub urls: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub truth: GroundTruth,
    /// Primary file contents, then a second file with replayed duplicates.
    pub files: Vec<(String, Vec<SynthRecord>)>,
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Deterministic pronounceable word for an index.
pub fn synth_word(mut i: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut s = String::new();
    for _ in 0..3 {
        let syl = i % base;
        s.push(CONSONANTS[syl / VOWELS.len()] as char);
        s.push(VOWELS[syl % VOWELS.len()] as char);
        i /= base;
    }
    s
}

fn gamma_draw(rng: &mut ChaCha8Rng, shape: f64) -> f64 {
    Gamma::new(shape, 1.0).expect("positive shape").sample(rng)
}

fn dirichlet(rng: &mut ChaCha8Rng, conc: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = conc.iter().map(|&a| gamma_draw(rng, a)).collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        // every draw underflowed: put all mass on the largest concentration
        let top = conc.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0))).map_or(0, |(i, _)| i);
        v = vec![0.0; conc.len()];
        v[top] = 1.0;
    }
    v
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn gaussian_vec(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn month_list(start: &str, n: usize) -> Vec<(String, NaiveDate)> {
    let first = NaiveDate::parse_from_str(&format!("{start}-01"), "%Y-%m-%d").expect("validated");
    (0..n)
        .map(|i| {
            let d = first.checked_add_months(chrono::Months::new(i as u32)).expect("month in range");
            (d.format("%Y-%m").to_string(), d)
        })
        .collect()
}

fn title_case(s: &str) -> String {
    s.split(' ')
        .map(|w| {
            let mut c = w.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
        })
        .collect::<Vec<String>>()
        .join(" ")
}

const FOREIGN_LOCATIONS: [&str; 6] = [
    "Paris, France",
    "Toronto, Canada",
    "Mumbai, India",
    "somewhere over the rainbow",
    "planet earth",
    "Berlin, Deutschland",
];

const SPANISH_TEXT: &str =
    "el virus del papiloma humano es una infección muy común y la vacuna contra el vph ayuda a prevenir el cáncer";

/// Class features drawn uniformly among the combinations that yield `class`.
fn draw_features(rng: &mut ChaCha8Rng, class: MessageClass) -> MessageFeatures {
    let combos: Vec<MessageFeatures> = (0..8u8)
        .map(|b| MessageFeatures { has_url: b & 1 != 0, is_quote: b & 2 != 0, is_retweet: b & 4 != 0 })
        .filter(|f| classify_features(*f) == class)
        .collect();
    combos[rng.random_range(0..combos.len())]
}

/// Draws a corpus and its ground truth from `spec` using `gaz` for place
/// names and coordinates.
pub fn generate_corpus(spec: &SynthSpec, gaz: &Gazetteer) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (k, v) = (spec.k, spec.v);
    let words: Vec<String> = (0..v).map(synth_word).collect();

    let mut phi = Vec::with_capacity(k);
    for t in 0..k {
        let (lo, hi) = (t * v / k, (t + 1) * v / k);
        let block = dirichlet(&mut rng, &vec![1.0; hi - lo]);
        let mut row = vec![spec.topic_noise / v as f64; v];
        for (w, p) in (lo..hi).zip(block) {
            row[w] += (1.0 - spec.topic_noise) * p;
        }
        phi.push(row);
    }
    let word_dists: Vec<WeightedIndex<f64>> =
        phi.iter().map(|r| WeightedIndex::new(r).expect("topic rows are positive")).collect();

    let states: Vec<StateCode> = StateCode::all().collect();
    let state_w: Vec<f64> =
        states
            .iter()
            .map(|s| {
                if spec.state_weights.is_empty() {
                    1.0
                } else {
                    spec.state_weights.get(s.code()).copied().unwrap_or(0.0)
                }
            })
            .collect();
    let state_dist = WeightedIndex::new(&state_w).map_err(|e| Error::Config(format!("state weights: {e}")))?;
    let state_tilts: BTreeMap<StateCode, Vec<f64>> = states.iter().map(|&s| (s, gaussian_vec(&mut rng, k))).collect();
    let months = month_list(&spec.start_month, spec.months);
    let month_tilts: BTreeMap<String, Vec<f64>> =
        months.iter().map(|(m, _)| (m.clone(), gaussian_vec(&mut rng, k))).collect();

    let mut by_state: BTreeMap<StateCode, Vec<usize>> = BTreeMap::new();
    for (i, p) in gaz.places().iter().enumerate() {
        by_state.entry(p.state).or_default().push(i);
    }
    let g = &spec.geo;
    let hint_dist = WeightedIndex::new([g.coordinates, g.place, g.user_location, g.unresolvable])
        .map_err(|e| Error::Config(format!("geo mix: {e}")))?;
    let len_dist = Poisson::new(spec.mean_doc_len - 1.0).ok();

    let mut messages = Vec::with_capacity(spec.d);
    let mut records = Vec::with_capacity(spec.d);
    for i in 0..spec.d {
        let id = format!("m{i:07}");
        let state = states[state_dist.sample(&mut rng)];
        let (month, first_day) = &months[rng.random_range(0..months.len())];
        let logits: Vec<f64> = state_tilts[&state]
            .iter()
            .zip(&month_tilts[month])
            .map(|(a, b)| spec.state_tilt * a + spec.time_tilt * b)
            .collect();
        let base = softmax(&logits);
        let conc: Vec<f64> = base.iter().map(|m| spec.alpha * k as f64 * m).collect();
        let theta = dirichlet(&mut rng, &conc);
        let theta_dist = WeightedIndex::new(&theta).expect("theta sums to one");
        let len = 1 + len_dist.map_or(0, |d| d.sample(&mut rng) as usize);
        let mut tokens = Vec::with_capacity(len + 1);
        tokens.push(spec.marker.clone());
        for _ in 0..len {
            let t = theta_dist.sample(&mut rng);
            tokens.push(words[word_dists[t].sample(&mut rng)].clone());
        }

        let class =
            if rng.random_bool(spec.promotional_share) { MessageClass::Promotional } else { MessageClass::Consumer };
        let f = draw_features(&mut rng, class);
        let mut text = tokens.join(" ");
        let mut retweet_flag = false;
        if f.is_retweet {
            if rng.random_bool(0.5) {
                text = format!("RT @user{}: {text}", rng.random_range(0..1000));
            } else {
                retweet_flag = true;
            }
        }
        let mut urls = Vec::new();
        if f.has_url {
            let u = format!("https://t.co/{id}");
            text.push(' ');
            text.push_str(&u);
            urls.push(u);
        }

        let days =
            (first_day.checked_add_months(chrono::Months::new(1)).expect("month in range") - *first_day).num_days();
        let created = Utc.from_utc_datetime(&first_day.and_hms_opt(0, 0, 0).expect("midnight"))
            + Duration::seconds(rng.random_range(0..days * 86_400));

        let hint = [HintKind::Coordinates, HintKind::Place, HintKind::UserLocation, HintKind::Unresolvable]
            [hint_dist.sample(&mut rng)];
        let candidates = by_state.get(&state);
        let hint = if candidates.is_none() && hint != HintKind::Unresolvable { HintKind::UserLocation } else { hint };
        let mut rec = SynthRecord {
            id: id.clone(),
            text,
            lang: "en".into(),
            created_at: created.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            latitude: None,
            longitude: None,
            place_name: None,
            user_location: None,
            is_quote: f.is_quote,
            is_retweet: retweet_flag,
            urls,
        };
        let pick_place = |rng: &mut ChaCha8Rng| {
            let c = candidates.expect("state has places");
            &gaz.places()[c[rng.random_range(0..c.len())]]
        };
        match hint {
            HintKind::Coordinates => {
                let p = pick_place(&mut rng);
                rec.latitude = Some(p.latitude);
                rec.longitude = Some(p.longitude);
            }
            HintKind::Place => {
                let p = pick_place(&mut rng);
                rec.place_name = Some(format!("{}, {}", title_case(&p.name), state.code()));
            }
            HintKind::UserLocation => {
                rec.user_location = Some(match (candidates.is_some(), rng.random_range(0..3)) {
                    (true, 0) => {
                        let p = pick_place(&mut rng);
                        format!("{}, {}", title_case(&p.name), state.name())
                    }
                    (true, 1) => {
                        let p = pick_place(&mut rng);
                        format!("{}, {}", title_case(&p.name), state.code())
                    }
                    _ => state.name().to_string(),
                });
            }
            HintKind::Unresolvable => {
                let j = rng.random_range(0..=FOREIGN_LOCATIONS.len());
                rec.user_location = FOREIGN_LOCATIONS.get(j).map(|s| s.to_string());
            }
        }
        messages.push(TruthMessage {
            id,
            class,
            state,
            hint,
            month: month.clone(),
            theta,
            has_url: f.has_url,
            is_quote: f.is_quote,
            is_retweet: f.is_retweet,
        });
        records.push(rec);
    }

    let mut second = Vec::new();
    for r in &records {
        if rng.random_bool(spec.noise.duplicate_share) {
            second.push(r.clone());
        }
    }
    let extra = |share: f64| (share * spec.d as f64).round() as usize;
    let stamp = records.first().map(|r| r.created_at.clone()).unwrap_or_default();
    for i in 0..extra(spec.noise.irrelevant_share) {
        let text: Vec<&str> = (0..8).map(|_| words[rng.random_range(0..v)].as_str()).collect();
        second.push(SynthRecord {
            id: format!("x{i:07}"),
            text: text.join(" "),
            lang: "en".into(),
            created_at: stamp.clone(),
            latitude: None,
            longitude: None,
            place_name: None,
            user_location: None,
            is_quote: false,
            is_retweet: false,
            urls: vec![],
        });
    }
    for i in 0..extra(spec.noise.non_english_share) {
        second.push(SynthRecord {
            id: format!("e{i:07}"),
            text: format!("{} {SPANISH_TEXT}", spec.marker),
            lang: "es".into(),
            created_at: stamp.clone(),
            latitude: None,
            longitude: None,
            place_name: None,
            user_location: None,
            is_quote: false,
            is_retweet: false,
            urls: vec![],
        });
    }

    let state_topic_prevalence = prevalence_table(&messages, k, spec.prevalence_cutoff);
    Ok(SynthCorpus {
        truth: GroundTruth {
            spec: spec.clone(),
            words,
            phi,
            state_tilts,
            month_tilts,
            messages,
            state_topic_prevalence,
        },
        files: vec![("a.jsonl".into(), records), ("b.jsonl".into(), second)],
    })
}

fn prevalence_table(messages: &[TruthMessage], k: usize, cutoff: f64) -> BTreeMap<StateCode, Vec<f64>> {
    let mut acc: BTreeMap<StateCode, (Vec<f64>, f64)> = BTreeMap::new();
    for m in messages.iter().filter(|m| m.class == MessageClass::Consumer && m.resolvable()) {
        let e = acc.entry(m.state).or_insert_with(|| (vec![0.0; k], 0.0));
        e.1 += 1.0;
        for (c, &p) in e.0.iter_mut().zip(&m.theta) {
            if p >= cutoff {
                *c += 1.0;
            }
        }
    }
    acc.into_iter().map(|(s, (counts, n))| (s, counts.into_iter().map(|c| c / n).collect())).collect()
}

/// Writes records, the ground truth, the gazetteer and tile geometry under
/// `out`: `records/a.jsonl`, `records/b.jsonl`, `truth.json`,
/// `gazetteer.tsv`, `states.geojson`.
pub fn write_corpus(out: &Path, corpus: &SynthCorpus, gazetteer_tsv: &str) -> Result<()> {
    for (name, recs) in &corpus.files {
        crate::io::write_jsonl(&out.join("records").join(name), recs)?;
    }
    corpus.truth.save(&out.join("truth.json"))?;
    let gp = out.join("gazetteer.tsv");
    {
        use std::io::Write;
        let mut w = crate::io::create_writer(&gp)?;
        w.write_all(gazetteer_tsv.as_bytes()).map_err(|e| Error::io(&gp, e))?;
        w.flush().map_err(|e| Error::io(&gp, e))?;
    }
    crate::io::write_json(&out.join("states.geojson"), &StateShape::to_geojson(&tile_grid()))
}

/// Parameters for planting a state-level survey signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSpec {
    pub qg: String,
    pub topic: usize,
    pub target_rho: f64,
    /// Standard deviation of the state-level perturbation of answer rates.
    pub noise_sigma: f64,
    pub respondents_per_state: usize,
    pub seed: u64,
}

impl Default for PlantSpec {
    fn default() -> Self {
        PlantSpec {
            qg: "QG1".into(),
            topic: 0,
            target_rho: 0.9,
            noise_sigma: 0.01,
            respondents_per_state: 400,
            seed: 1,
        }
    }
}

/// Minimum states with consumer messages needed to plant a signal.
pub const MIN_PLANT_STATES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantReport {
    pub qg: String,
    pub topic: usize,
    pub target_rho: f64,
    /// Spearman ρ between true prevalence and the realized estimates.
    pub achieved_rho: f64,
    pub n_states: usize,
}

fn normal_scores(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let std = StatNormal::new(0.0, 1.0).expect("standard normal");
    crate::analytics::ranks(values).into_iter().map(|r| std.inverse_cdf((r - 0.5) / n)).collect()
}

fn non_interested_code(interested: &[String]) -> String {
    ["No", "Not at all successful", "Not sure", "Don't know"]
        .iter()
        .find(|c| !interested.iter().any(|i| i.eq_ignore_ascii_case(c)))
        .map(|c| c.to_string())
        .unwrap_or_else(|| "none".into())
}

fn rate(z: f64, e: f64, r: f64, noise: f64) -> f64 {
    let std = StatNormal::new(0.0, 1.0).expect("standard normal");
    (0.2 + 0.6 * std.cdf(r * z + (1.0 - r * r).sqrt() * e) + noise).clamp(0.02, 0.98)
}

/// Kish design effect of respondent weights drawn uniformly from [0.5, 2).
const WEIGHT_DESIGN_EFFECT: f64 = 1.12;

/// Latent copula correlation whose expected Spearman ρ between `x` and the
/// weighted survey estimates equals the target. The bivariate-normal
/// conversion alone undershoots once prevalence has ties (states with no
/// topic messages) and respondent sampling adds noise, so the correlation is
/// found by bisection over Monte Carlo draws shared across steps.
fn latent_correlation(x: &[f64], zx: &[f64], plant: &PlantSpec, jitter: &Normal<f64>) -> f64 {
    const DRAWS: usize = 200;
    if plant.target_rho == 0.0 {
        return 0.0;
    }
    let target = plant.target_rho.abs();
    let n_eff = plant.respondents_per_state as f64 / WEIGHT_DESIGN_EFFECT;
    let mut rng = ChaCha8Rng::seed_from_u64(plant.seed ^ 0x9e37_79b9_7f4a_7c15);
    let draws: Vec<Vec<[f64; 3]>> = (0..DRAWS)
        .map(|_| {
            zx.iter()
                .map(|_| {
                    let e: f64 = rng.sample(StandardNormal);
                    let n = if plant.noise_sigma > 0.0 { jitter.sample(&mut rng) } else { 0.0 };
                    [e, n, rng.sample(StandardNormal)]
                })
                .collect()
        })
        .collect();
    let mean_rho = |r: f64| {
        let total: f64 = draws
            .iter()
            .map(|d| {
                let y: Vec<f64> = zx
                    .iter()
                    .zip(d)
                    .map(|(&z, &[e, n, u])| {
                        let p = rate(z, e, r, n);
                        p + u * (p * (1.0 - p) / n_eff).sqrt()
                    })
                    .collect();
                crate::analytics::spearman_values(x, &y, crate::analytics::PValueMethod::TApprox)
                    .map(|c| c.coefficient)
                    .unwrap_or(0.0)
            })
            .sum();
        total / DRAWS as f64
    };
    let (mut lo, mut hi) = (0.0, 0.9999);
    if mean_rho(hi) <= target {
        return hi.copysign(plant.target_rho);
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if mean_rho(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).copysign(plant.target_rho)
}

/// Synthesizes weighted respondents in every state with consumer messages.
/// The planted group's answer rate is a noisy monotone function of the
/// topic's true prevalence (Gaussian copula calibrated so the expected
/// Spearman ρ hits the target); all other groups are answered independently.
pub fn plant_geo_correlation(
    truth: &GroundTruth,
    groups: &QuestionGroups,
    plant: &PlantSpec,
) -> Result<(Vec<SurveyRespondent>, PlantReport)> {
    if !(plant.target_rho.abs() <= 0.95) {
        return Err(Error::Config(format!("target rho must satisfy |ρ| ≤ 0.95, got {}", plant.target_rho)));
    }
    if plant.topic >= truth.spec.k {
        return Err(Error::Config(format!("topic {} is out of range for K = {}", plant.topic, truth.spec.k)));
    }
    if plant.respondents_per_state == 0 || !(plant.noise_sigma >= 0.0) {
        return Err(Error::Config("need respondents_per_state ≥ 1 and noise_sigma ≥ 0".into()));
    }
    let target =
        groups.get(&plant.qg).ok_or_else(|| Error::Config(format!("unknown question group `{}`", plant.qg)))?;
    let prevalence = truth.prevalence(plant.topic);
    if prevalence.len() < MIN_PLANT_STATES {
        return Err(Error::InsufficientData { needed: MIN_PLANT_STATES, have: prevalence.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plant.seed);
    let states: Vec<StateCode> = prevalence.keys().copied().collect();
    let x: Vec<f64> = prevalence.values().copied().collect();
    let zx = normal_scores(&x);
    let jitter = Normal::new(0.0, plant.noise_sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let r = latent_correlation(&x, &zx, plant, &jitter);
    let mut rates: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for g in &groups.groups {
        let p: Vec<f64> = zx
            .iter()
            .map(|&z| {
                let e: f64 = rng.sample(StandardNormal);
                let noise = if plant.noise_sigma > 0.0 { jitter.sample(&mut rng) } else { 0.0 };
                rate(z, e, if g.id == target.id { r } else { 0.0 }, noise)
            })
            .collect();
        rates.insert(g.id.clone(), p);
    }
    let mut respondents = Vec::new();
    for (si, &s) in states.iter().enumerate() {
        for j in 0..plant.respondents_per_state {
            let mut answers = BTreeMap::new();
            for g in &groups.groups {
                let q = &g.questions[0];
                let yes = rng.random_bool(rates[&g.id][si]);
                let a = if yes { q.interested[0].clone() } else { non_interested_code(&q.interested) };
                answers.insert(q.id.clone(), a);
            }
            respondents.push(SurveyRespondent {
                id: format!("{}-{j:05}", s.code()),
                state: s,
                weight: rng.random_range(0.5..2.0),
                answers,
            });
        }
    }
    let estimates = crate::survey::state_estimates(&respondents, target);
    let achieved = spearman(&prevalence, &estimates).map(|c| c.coefficient).unwrap_or(0.0);
    Ok((
        respondents,
        PlantReport {
            qg: plant.qg.clone(),
            topic: plant.topic,
            target_rho: plant.target_rho,
            achieved_rho: achieved,
            n_states: states.len(),
        },
    ))
}

/// Learned topic-word distributions re-indexed onto the true vocabulary.
/// Words the model pruned get probability 0.
pub fn project_phi(model: &LdaModel, words: &[String]) -> Vec<Vec<f64>> {
    let idx: Vec<Option<u32>> = words.iter().map(|w| model.vocabulary.get(w)).collect();
    (0..model.k())
        .map(|t| {
            let phi = model.phi(t);
            idx.iter().map(|i| i.map_or(0.0, |i| phi[i as usize])).collect()
        })
        .collect()
}

/// Greedy alignment: repeatedly pairs the unmatched (learned, true) topics
/// with the highest cosine. Returns (learned, true, cosine) triples.
pub fn greedy_align(learned: &[Vec<f64>], truth: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, a) in learned.iter().enumerate() {
        for (j, b) in truth.iter().enumerate() {
            pairs.push((i, j, cosine(a, b)));
        }
    }
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut used_l = vec![false; learned.len()];
    let mut used_t = vec![false; truth.len()];
    let mut out = Vec::new();
    for (i, j, c) in pairs {
        if !used_l[i] && !used_t[j] {
            used_l[i] = true;
            used_t[j] = true;
            out.push((i, j, c));
        }
    }
    out.sort_by_key(|p| p.1);
    out
}

pub fn mean_matched_cosine(alignment: &[(usize, usize, f64)]) -> f64 {
    alignment.iter().map(|p| p.2).sum::<f64>() / alignment.len().max(1) as f64
}
