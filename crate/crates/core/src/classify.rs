//! Rule-based split of messages into promotional information and consumer
//! discussion, plus precision/recall evaluation against annotations.
//!
//! The rules look only at three booleans computed on the original message
//! (before URL stripping):
//!
//! | URL | quote | retweet | class       |
//! |-----|-------|---------|-------------|
//! | no  | *     | *       | Consumer    |
//! | yes | yes   | no      | Consumer    |
//! | yes | yes   | yes     | Promotional |
//! | yes | no    | *       | Promotional |

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ingest::CleanMessage;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageClass {
    Promotional,
    Consumer,
}

impl MessageClass {
    pub const ALL: [MessageClass; 2] = [MessageClass::Promotional, MessageClass::Consumer];

    pub fn as_str(self) -> &'static str {
        match self {
            MessageClass::Promotional => "promotional",
            MessageClass::Consumer => "consumer",
        }
    }
}

impl fmt::Display for MessageClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MessageClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "promotional" | "promotion" | "promo" | "p" => Ok(MessageClass::Promotional),
            "consumer" | "consumers" | "c" => Ok(MessageClass::Consumer),
            other => Err(Error::Input(format!("unknown message class `{other}`"))),
        }
    }
}

/// The three structural features the rules depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageFeatures {
    pub has_url: bool,
    pub is_quote: bool,
    pub is_retweet: bool,
}

pub fn classify_features(f: MessageFeatures) -> MessageClass {
    match (f.has_url, f.is_quote, f.is_retweet) {
        (false, _, _) => MessageClass::Consumer,
        (true, true, false) => MessageClass::Consumer,
        (true, true, true) => MessageClass::Promotional,
        (true, false, _) => MessageClass::Promotional,
    }
}

/// True if the retweet flag is set or the raw text starts with `rt @` or
/// `rt:` (case-insensitive).
pub fn detect_retweet(retweet_flag: bool, raw_text: &str) -> bool {
    if retweet_flag {
        return true;
    }
    let head: String = raw_text.trim_start().chars().take(4).collect::<String>().to_lowercase();
    head.starts_with("rt @") || head.starts_with("rt:")
}

pub fn features(msg: &CleanMessage) -> MessageFeatures {
    MessageFeatures {
        has_url: msg.has_url,
        is_quote: msg.is_quote,
        is_retweet: detect_retweet(msg.is_retweet, &msg.text),
    }
}

pub fn classify(msg: &CleanMessage) -> MessageClass {
    classify_features(features(msg))
}

/// Fills in `class` on every message.
pub fn classify_corpus(corpus: &mut [CleanMessage]) {
    for m in corpus.iter_mut() {
        m.class = Some(classify(m));
    }
}

/// Human gold labels keyed by message id.
#[derive(Debug, Clone, Default)]
pub struct AnnotationSet {
    entries: Vec<(String, MessageClass)>,
}

impl AnnotationSet {
    pub fn new(entries: Vec<(String, MessageClass)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (id, _) in &entries {
            if !seen.insert(id.as_str()) {
                return Err(Error::Input(format!("duplicate annotation for id `{id}`")));
            }
        }
        Ok(AnnotationSet { entries })
    }

    /// Reads a CSV with header `id,label`.
    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = crate::io::csv_reader(path)?;
        let mut entries = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| Error::csv(path, e))?;
            let id = row.get(0).unwrap_or_default().to_string();
            let label = row.get(1).ok_or_else(|| Error::Input(format!("annotation row for `{id}` has no label")))?;
            entries.push((id, label.parse()?));
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[(String, MessageClass)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Precision, recall and F-measure as fractions in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Metrics {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Metrics::from_precision_recall(ratio(tp, tp + fp), ratio(tp, tp + fn_))
    }

    /// F = 2PR / (P + R), zero when both are zero.
    pub fn from_precision_recall(precision: f64, recall: f64) -> Metrics {
        let f_measure = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Metrics { precision, recall, f_measure }
    }

    /// Percentages rounded to two decimals.
    pub fn as_percentages(&self) -> (f64, f64, f64) {
        let pct = |v: f64| (v * 10_000.0).round() / 100.0;
        (pct(self.precision), pct(self.recall), pct(self.f_measure))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub per_class: BTreeMap<MessageClass, Metrics>,
    pub macro_avg: Metrics,
    pub n: usize,
}

pub fn evaluate(predictions: &HashMap<String, MessageClass>, annotations: &AnnotationSet) -> Result<Evaluation> {
    let mut pairs = Vec::with_capacity(annotations.len());
    for (id, gold) in annotations.entries() {
        let pred = predictions.get(id).ok_or_else(|| Error::MissingPrediction(id.clone()))?;
        pairs.push((*gold, *pred));
    }
    let mut per_class = BTreeMap::new();
    for class in MessageClass::ALL {
        let tp = pairs.iter().filter(|(g, p)| *g == class && *p == class).count();
        let fp = pairs.iter().filter(|(g, p)| *g != class && *p == class).count();
        let fn_ = pairs.iter().filter(|(g, p)| *g == class && *p != class).count();
        per_class.insert(class, Metrics::from_counts(tp, fp, fn_));
    }
    let k = per_class.len() as f64;
    let p = per_class.values().map(|m| m.precision).sum::<f64>() / k;
    let r = per_class.values().map(|m| m.recall).sum::<f64>() / k;
    Ok(Evaluation { per_class, macro_avg: Metrics::from_precision_recall(p, r), n: pairs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use MessageClass::*;

    fn f(has_url: bool, is_quote: bool, is_retweet: bool) -> MessageFeatures {
        MessageFeatures { has_url, is_quote, is_retweet }
    }

    #[test]
    fn named_cases() {
        assert_eq!(classify_features(f(false, false, true)), Consumer);
        assert_eq!(classify_features(f(true, true, false)), Consumer);
        assert_eq!(classify_features(f(true, false, false)), Promotional);
        assert_eq!(classify_features(f(true, true, true)), Promotional);
    }

    #[test]
    fn retweet_detection() {
        assert!(detect_retweet(false, "RT @user1: HPV facts"));
        assert!(detect_retweet(false, "rt: look at this"));
        assert!(!detect_retweet(false, "art of vaccines"));
        assert!(!detect_retweet(false, "rtx @x"));
        assert!(detect_retweet(true, "plain text"));
    }

    #[test]
    fn f_measure_from_reported_precision_recall() {
        let m = Metrics::from_precision_recall(0.8421, 0.86);
        assert!((m.f_measure * 100.0 - 85.10).abs() < 0.01);
    }

    #[test]
    fn hand_counts() {
        let m = Metrics::from_counts(1, 1, 3);
        assert_eq!(m.as_percentages(), (50.0, 25.0, 33.33));
    }

    #[test]
    fn perfect_predictions() {
        let ann = AnnotationSet::new(vec![("a".into(), Consumer), ("b".into(), Promotional)]).unwrap();
        let preds: HashMap<_, _> = [("a".to_string(), Consumer), ("b".to_string(), Promotional)].into();
        let ev = evaluate(&preds, &ann).unwrap();
        for m in ev.per_class.values().chain([&ev.macro_avg]) {
            assert_eq!(m.as_percentages(), (100.0, 100.0, 100.0));
        }
    }

    #[test]
    fn missing_prediction_is_fatal() {
        let ann = AnnotationSet::new(vec![("a".into(), Consumer)]).unwrap();
        assert!(matches!(evaluate(&HashMap::new(), &ann), Err(Error::MissingPrediction(_))));
    }

    #[test]
    fn duplicate_annotation_rejected() {
        assert!(AnnotationSet::new(vec![("a".into(), Consumer), ("a".into(), Consumer)]).is_err());
    }

    #[test]
    fn harmonic_mean_identity() {
        for (tp, fp, fn_) in [(5, 2, 1), (9, 1, 4), (3, 3, 3)] {
            let m = Metrics::from_counts(tp, fp, fn_);
            let lhs = 1.0 / m.f_measure;
            let rhs = (1.0 / m.precision + 1.0 / m.recall) / 2.0;
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
