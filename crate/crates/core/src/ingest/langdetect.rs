//! Character-trigram language identification (Cavnar & Trenkle ranked
//! profiles with the out-of-place distance).
//!
//! Profiles for en, es, fr, pt and de are built on first use from the
//! sample texts shipped in `data/lang/`.

use std::collections::HashMap;
use std::sync::LazyLock;

/// Number of ranked trigrams kept per language profile.
pub const PROFILE_SIZE: usize = 400;

/// Detections whose normalized distance exceeds this are reported as unknown.
pub const DEFAULT_MAX_DISTANCE: f64 = 0.92;

const SAMPLES: [(&str, &str); 5] = [
    ("en", include_str!("../../data/lang/en.txt")),
    ("es", include_str!("../../data/lang/es.txt")),
    ("fr", include_str!("../../data/lang/fr.txt")),
    ("pt", include_str!("../../data/lang/pt.txt")),
    ("de", include_str!("../../data/lang/de.txt")),
];

static BUILTIN: LazyLock<LanguageDetector> =
    LazyLock::new(|| LanguageDetector::from_samples(SAMPLES.iter().copied(), DEFAULT_MAX_DISTANCE));

/// Ranked trigram profile: trigram → rank (0 = most frequent).
#[derive(Debug, Clone)]
pub struct Profile {
    ranks: HashMap<String, usize>,
}

fn trigram_counts(text: &str) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    let lowered = text.to_lowercase();
    for word in
        lowered.split(|c: char| !c.is_alphabetic() && c != '\'').map(|w| w.trim_matches('\'')).filter(|w| !w.is_empty())
    {
        let padded: Vec<char> = std::iter::once(' ').chain(word.chars()).chain(std::iter::once(' ')).collect();
        for tri in padded.windows(3) {
            *counts.entry(tri.iter().collect::<String>()).or_insert(0) += 1;
        }
    }
    counts
}

impl Profile {
    pub fn build(text: &str, size: usize) -> Self {
        let mut ranked: Vec<(String, usize)> = trigram_counts(text).into_iter().collect();
        // frequency descending, then lexicographic for determinism
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(size);
        Profile { ranks: ranked.into_iter().enumerate().map(|(rank, (tri, _))| (tri, rank)).collect() }
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Out-of-place distance of `doc` against this profile, normalized to
    /// [0, 1] by the maximum possible penalty.
    pub fn distance(&self, doc: &Profile, max_penalty: usize) -> f64 {
        if doc.is_empty() {
            return 1.0;
        }
        let total: usize = doc
            .ranks
            .iter()
            .map(|(tri, &r)| match self.ranks.get(tri) {
                Some(&lr) => r.abs_diff(lr).min(max_penalty),
                None => max_penalty,
            })
            .sum();
        total as f64 / (doc.len() * max_penalty) as f64
    }
}

#[derive(Debug, Clone)]
pub struct LanguageDetector {
    profiles: Vec<(String, Profile)>,
    max_distance: f64,
}

/// Best-matching language and its normalized distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub lang: Option<String>,
    pub distance: f64,
}

impl LanguageDetector {
    pub fn from_samples<'a>(samples: impl IntoIterator<Item = (&'a str, &'a str)>, max_distance: f64) -> Self {
        LanguageDetector {
            profiles: samples
                .into_iter()
                .map(|(lang, text)| (lang.to_string(), Profile::build(text, PROFILE_SIZE)))
                .collect(),
            max_distance,
        }
    }

    /// The shipped five-language detector.
    pub fn builtin() -> &'static LanguageDetector {
        &BUILTIN
    }

    pub fn detect(&self, text: &str) -> Detection {
        let doc = Profile::build(text, PROFILE_SIZE);
        let mut best: Option<(&str, f64)> = None;
        for (lang, profile) in &self.profiles {
            let d = profile.distance(&doc, PROFILE_SIZE);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((lang, d));
            }
        }
        match best {
            Some((lang, d)) if d <= self.max_distance => Detection { lang: Some(lang.to_string()), distance: d },
            Some((_, d)) => Detection { lang: None, distance: d },
            None => Detection { lang: None, distance: 1.0 },
        }
    }
}
