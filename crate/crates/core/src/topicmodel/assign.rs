use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lda::LdaModel;
use crate::{Error, Result};

/// Calibrated cutoff reported for the HPV corpus.
pub const DEFAULT_CUTOFF: f64 = 0.15;
pub const DEFAULT_ADEQUACY_THRESHOLD: f64 = 0.80;

/// Topics retained for one message, most probable first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub id: String,
    pub topics: Vec<(usize, f64)>,
}

impl TopicAssignment {
    pub fn is_assigned(&self) -> bool {
        !self.topics.is_empty()
    }

    pub fn has_topic(&self, topic: usize) -> bool {
        self.topics.iter().any(|&(t, _)| t == topic)
    }
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if cutoff > 0.0 && cutoff < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("topic cutoff must lie in (0, 1), got {cutoff}")))
    }
}

/// Keeps, per document, every topic with θ̂ ≥ cutoff in descending order
/// (ties by topic index).
pub fn assign_topics(model: &LdaModel, cutoff: f64) -> Result<Vec<TopicAssignment>> {
    check_cutoff(cutoff)?;
    Ok((0..model.num_docs())
        .map(|d| {
            let theta = model.theta(d);
            let mut topics: Vec<(usize, f64)> = theta.into_iter().enumerate().filter(|&(_, p)| p >= cutoff).collect();
            topics.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            TopicAssignment { id: model.doc_ids[d].clone(), topics }
        })
        .collect())
}

pub fn count_assigned(assignments: &[TopicAssignment]) -> (usize, usize) {
    let assigned = assignments.iter().filter(|a| a.is_assigned()).count();
    (assigned, assignments.len() - assigned)
}

pub fn write_assignments(path: &Path, assignments: &[TopicAssignment]) -> Result<()> {
    crate::io::write_jsonl(path, assignments)
}

pub fn read_assignments(path: &Path) -> Result<Vec<TopicAssignment>> {
    crate::io::read_jsonl(path)
}

/// One line of a cutoff-calibration review sheet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRow {
    pub cutoff: f64,
    pub id: String,
    pub text: String,
    /// `topic:probability` pairs separated by `;`.
    pub topics: String,
    /// `topic: word word ...` entries separated by ` | `.
    pub top_words: String,
    /// Filled in by the reviewer: adequate / inadequate (yes/no, 1/0).
    #[serde(default)]
    pub verdict: String,
}

/// Samples `n` assigned documents per cutoff for human review.
pub fn calibration_sample(
    model: &LdaModel,
    texts: &HashMap<String, String>,
    cutoffs: &[f64],
    n: usize,
    seed: u64,
    words_per_topic: usize,
) -> Result<Vec<ReviewRow>> {
    let mut rows = Vec::new();
    for (ci, &cutoff) in cutoffs.iter().enumerate() {
        let assigned: Vec<TopicAssignment> =
            assign_topics(model, cutoff)?.into_iter().filter(TopicAssignment::is_assigned).collect();
        if n > assigned.len() {
            return Err(Error::Input(format!(
                "cannot sample {n} documents at cutoff {cutoff}: only {} are assigned",
                assigned.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(ci as u64));
        for i in sample(&mut rng, assigned.len(), n).into_iter() {
            let a = &assigned[i];
            let topics = a.topics.iter().map(|(t, p)| format!("{t}:{p:.4}")).collect::<Vec<_>>().join(";");
            let top_words = a
                .topics
                .iter()
                .map(|&(t, _)| {
                    let words: Vec<String> = model.top_words(t, words_per_topic).into_iter().map(|(w, _)| w).collect();
                    format!("{t}: {}", words.join(" "))
                })
                .collect::<Vec<_>>()
                .join(" | ");
            rows.push(ReviewRow {
                cutoff,
                id: a.id.clone(),
                text: texts.get(&a.id).cloned().unwrap_or_default(),
                topics,
                top_words,
                verdict: String::new(),
            });
        }
    }
    Ok(rows)
}

pub fn write_review_sheet(path: &Path, rows: &[ReviewRow]) -> Result<()> {
    let mut w = crate::io::csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_review_sheet(path: &Path) -> Result<Vec<ReviewRow>> {
    let mut rdr = crate::io::csv_reader(path)?;
    rdr.deserialize().map(|r| r.map_err(|e| Error::csv(path, e))).collect()
}

fn parse_verdict(v: &str) -> Result<Option<bool>> {
    match v.trim().to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "adequate" | "yes" | "y" | "1" | "true" => Ok(Some(true)),
        "inadequate" | "no" | "n" | "0" | "false" => Ok(Some(false)),
        other => Err(Error::Input(format!("unrecognized verdict `{other}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationScore {
    /// (cutoff, adequacy fraction) in ascending cutoff order.
    pub adequacy: Vec<(f64, f64)>,
    /// Lowest cutoff whose adequacy exceeds the threshold.
    pub selected: Option<f64>,
}

/// Lowest cutoff with adequacy strictly above `threshold`.
pub fn select_cutoff(adequacy: &[(f64, f64)], threshold: f64) -> Option<f64> {
    let mut sorted = adequacy.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted.into_iter().find(|&(_, a)| a > threshold).map(|(c, _)| c)
}

/// Adequacy per cutoff from reviewed rows; rows without a verdict are ignored.
pub fn calibration_score(rows: &[ReviewRow], threshold: f64) -> Result<CalibrationScore> {
    let mut tallies: BTreeMap<u64, (f64, usize, usize)> = BTreeMap::new();
    for r in rows {
        if let Some(ok) = parse_verdict(&r.verdict)? {
            let e = tallies.entry(r.cutoff.to_bits()).or_insert((r.cutoff, 0, 0));
            e.2 += 1;
            if ok {
                e.1 += 1;
            }
        }
    }
    let mut adequacy: Vec<(f64, f64)> =
        tallies.into_values().map(|(c, good, total)| (c, good as f64 / total as f64)).collect();
    adequacy.sort_by(|a, b| a.0.total_cmp(&b.0));
    let selected = select_cutoff(&adequacy, threshold);
    Ok(CalibrationScore { adequacy, selected })
}

/// Human judgments about one topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMeta {
    pub topic: usize,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub quality: String,
    #[serde(default)]
    pub excluded: bool,
    /// Construct tags, `;`-separated in the file.
    #[serde(default)]
    pub constructs: Vec<String>,
    #[serde(default)]
    pub question_groups: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct TopicMetaRow {
    topic: usize,
    #[serde(default)]
    label: String,
    #[serde(default)]
    quality: String,
    #[serde(default)]
    excluded: String,
    #[serde(default)]
    constructs: String,
    #[serde(default)]
    question_groups: String,
}

fn split_list(s: &str) -> Vec<String> {
    s.split(';').map(str::trim).filter(|x| !x.is_empty()).map(str::to_string).collect()
}

/// Topic annotations keyed by topic index. Topics without a row count as
/// included and unlabelled.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopicMetaTable(BTreeMap<usize, TopicMeta>);

impl TopicMetaTable {
    pub fn new(rows: Vec<TopicMeta>) -> Self {
        TopicMetaTable(rows.into_iter().map(|m| (m.topic, m)).collect())
    }

    /// Reads `topic,label,quality,excluded,constructs,question_groups`.
    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = crate::io::csv_reader(path)?;
        let mut rows = Vec::new();
        for r in rdr.deserialize::<TopicMetaRow>() {
            let r = r.map_err(|e| Error::csv(path, e))?;
            let excluded = match r.excluded.trim().to_ascii_lowercase().as_str() {
                "" | "false" | "no" | "0" => false,
                "true" | "yes" | "1" => true,
                other => return Err(Error::Input(format!("bad excluded flag `{other}` for topic {}", r.topic))),
            };
            let excluded = excluded || r.quality.trim().eq_ignore_ascii_case("low");
            rows.push(TopicMeta {
                topic: r.topic,
                label: r.label,
                quality: r.quality,
                excluded,
                constructs: split_list(&r.constructs),
                question_groups: split_list(&r.question_groups),
            });
        }
        Ok(Self::new(rows))
    }

    pub fn get(&self, topic: usize) -> Option<&TopicMeta> {
        self.0.get(&topic)
    }

    pub fn is_excluded(&self, topic: usize) -> bool {
        self.0.get(&topic).is_some_and(|m| m.excluded)
    }

    pub fn label(&self, topic: usize) -> String {
        self.0
            .get(&topic)
            .map(|m| m.label.clone())
            .filter(|l| !l.is_empty())
            .unwrap_or_else(|| format!("topic-{topic}"))
    }

    pub fn constructs(&self, topic: usize) -> &[String] {
        self.0.get(&topic).map(|m| m.constructs.as_slice()).unwrap_or(&[])
    }

    /// Topics in 0..k that are not excluded.
    pub fn included(&self, k: usize) -> Vec<usize> {
        (0..k).filter(|&t| !self.is_excluded(t)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Applies a relabeling where old topic `perm[i]` becomes topic `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = BTreeMap::new();
        for (new, &old) in perm.iter().enumerate() {
            if let Some(m) = self.0.get(&old) {
                out.insert(new, TopicMeta { topic: new, ..m.clone() });
            }
        }
        TopicMetaTable(out)
    }
}
