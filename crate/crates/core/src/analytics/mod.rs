//! Topic rankings, monthly-volume correlations between the two message
//! classes, state-level topic distributions, and topic-vs-survey tables.

mod stats;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use stats::{
    intersect, pearson, pearson_with, ranks, spearman, spearman_values, spearman_with, strength_band, t_p_value,
    CorrelationResult, Method, PValueMethod, MAX_PERMUTATIONS, MIN_SAMPLE,
};

use crate::classify::MessageClass;
use crate::ingest::CleanMessage;
use crate::survey::{QuestionGroup, QuestionGroups};
use crate::topicmodel::{TopicAssignment, TopicMetaTable};
use crate::{Error, Result, StateCode};

/// Significance threshold used for flagging rows.
pub const SIGNIFICANCE: f64 = 0.05;
/// Number of top words compared against question keywords.
pub const KEYWORD_TOP_N: usize = 20;

/// One classified message with its retained (non-excluded) topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub id: String,
    pub class: MessageClass,
    pub month: String,
    pub state: Option<StateCode>,
    pub topics: Vec<usize>,
}

/// Joins classified messages with their assignments, dropping excluded
/// topics. Messages without an assignment keep an empty topic list;
/// unclassified messages are skipped.
pub fn build_records(
    corpus: &[CleanMessage],
    assignments: &[TopicAssignment],
    meta: &TopicMetaTable,
) -> Vec<AnalysisRecord> {
    let by_id: HashMap<&str, &TopicAssignment> = assignments.iter().map(|a| (a.id.as_str(), a)).collect();
    corpus
        .iter()
        .filter_map(|m| {
            let class = m.class?;
            let mut topics: Vec<usize> = by_id
                .get(m.id.as_str())
                .map(|a| a.topics.iter().map(|&(t, _)| t).filter(|&t| !meta.is_excluded(t)).collect())
                .unwrap_or_default();
            topics.sort_unstable();
            topics.dedup();
            Some(AnalysisRecord { id: m.id.clone(), class, month: m.month_key.clone(), state: m.state, topics })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicShare {
    pub topic: usize,
    pub count: usize,
    /// Percentage of all messages of the class.
    pub percentage: f64,
}

pub fn share_percentage(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Topics ranked by how many messages of `class` carry them. A message
/// with m topics contributes to m topics; the denominator is the number of
/// messages of the class.
pub fn topic_shares(records: &[AnalysisRecord], class: MessageClass) -> Vec<TopicShare> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut total = 0;
    for r in records.iter().filter(|r| r.class == class) {
        total += 1;
        for &t in &r.topics {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    let mut out: Vec<TopicShare> = counts
        .into_iter()
        .map(|(topic, count)| TopicShare { topic, count, percentage: share_percentage(count, total) })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then(a.topic.cmp(&b.topic)));
    out
}

fn parse_month(m: &str) -> Result<(i32, u32)> {
    let bad = || Error::Input(format!("bad month key `{m}`"));
    let (y, mo) = m.split_once('-').ok_or_else(bad)?;
    let y: i32 = y.parse().map_err(|_| bad())?;
    let mo: u32 = mo.parse().map_err(|_| bad())?;
    if !(1..=12).contains(&mo) {
        return Err(bad());
    }
    Ok((y, mo))
}

/// Every month from `first` through `last` inclusive.
pub fn month_span(first: &str, last: &str) -> Result<Vec<String>> {
    let (mut y, mut m) = parse_month(first)?;
    let end = parse_month(last)?;
    let mut out = Vec::new();
    while (y, m) <= end {
        out.push(format!("{y:04}-{m:02}"));
        m += 1;
        if m == 13 {
            m = 1;
            y += 1;
        }
    }
    Ok(out)
}

/// Months covered by the records, from the earliest to the latest.
pub fn corpus_months(records: &[AnalysisRecord]) -> Result<Vec<String>> {
    let first = records.iter().map(|r| r.month.as_str()).min();
    let last = records.iter().map(|r| r.month.as_str()).max();
    match (first, last) {
        (Some(a), Some(b)) => month_span(a, b),
        _ => Ok(Vec::new()),
    }
}

/// Per-month values over a contiguous range of months.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlySeries {
    pub points: BTreeMap<String, f64>,
}

impl MonthlySeries {
    pub fn values(&self) -> Vec<f64> {
        self.points.values().copied().collect()
    }

    pub fn total(&self) -> f64 {
        self.points.values().sum()
    }
}

/// Monthly count of `class` messages carrying `topic`, densified over
/// `months`. With `normalize`, each count is divided by the month's total
/// number of `class` messages.
pub fn monthly_series(
    records: &[AnalysisRecord],
    topic: usize,
    class: MessageClass,
    months: &[String],
    normalize: bool,
) -> MonthlySeries {
    let mut points: BTreeMap<String, f64> = months.iter().map(|m| (m.clone(), 0.0)).collect();
    let mut totals: BTreeMap<&str, f64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.class == class) {
        *totals.entry(r.month.as_str()).or_insert(0.0) += 1.0;
        if r.topics.contains(&topic) {
            if let Some(v) = points.get_mut(&r.month) {
                *v += 1.0;
            }
        }
    }
    if normalize {
        for (m, v) in points.iter_mut() {
            let t = totals.get(m.as_str()).copied().unwrap_or(0.0);
            *v = if t > 0.0 { *v / t } else { 0.0 };
        }
    }
    MonthlySeries { points }
}

/// Per state, the share of consumer messages that carry `topic`. States with
/// no consumer messages are absent.
pub fn state_distribution(records: &[AnalysisRecord], topic: usize) -> BTreeMap<StateCode, f64> {
    let mut acc: BTreeMap<StateCode, (f64, f64)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.class == MessageClass::Consumer) {
        if let Some(s) = r.state {
            let e = acc.entry(s).or_insert((0.0, 0.0));
            e.1 += 1.0;
            if r.topics.contains(&topic) {
                e.0 += 1.0;
            }
        }
    }
    acc.into_iter().map(|(s, (hit, n))| (s, hit / n)).collect()
}

/// Number of consumer messages per state.
pub fn state_volumes(records: &[AnalysisRecord]) -> BTreeMap<StateCode, usize> {
    let mut out = BTreeMap::new();
    for r in records.iter().filter(|r| r.class == MessageClass::Consumer) {
        if let Some(s) = r.state {
            *out.entry(s).or_insert(0) += 1;
        }
    }
    out
}

fn keyword_matches(keyword: &str, word: &str) -> bool {
    let k = keyword.trim().to_lowercase();
    let k = k.strip_suffix('*').unwrap_or(&k);
    !k.is_empty() && word.to_lowercase().starts_with(k)
}

/// True iff every keyword prefix-matches one of `words`.
pub fn question_matches(keywords: &[String], words: &[String]) -> bool {
    let keywords: Vec<&String> = keywords.iter().filter(|k| !k.trim().is_empty()).collect();
    !keywords.is_empty() && keywords.iter().all(|k| words.iter().any(|w| keyword_matches(k, w)))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeywordMatch {
    pub topic: usize,
    pub qg: String,
    pub question: String,
}

/// Topic ↔ question matches. `top_words[t]` holds topic t's top words (the
/// caller passes the top 20).
pub fn keyword_map(top_words: &[Vec<String>], groups: &QuestionGroups) -> Vec<KeywordMatch> {
    let mut out = Vec::new();
    for (topic, words) in top_words.iter().enumerate() {
        for g in &groups.groups {
            for q in &g.questions {
                if question_matches(&q.keywords, words) {
                    out.push(KeywordMatch { topic, qg: g.id.clone(), question: q.id.clone() });
                }
            }
        }
    }
    out
}

/// Distinct (topic, QG) pairs implied by question-level matches.
pub fn topic_group_pairs(matches: &[KeywordMatch]) -> BTreeSet<(usize, String)> {
    matches.iter().map(|m| (m.topic, m.qg.clone())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Topic mapped to the group by keyword matching.
    Keyword,
    /// Topic carries at least one construct tag; paired with every group.
    Construct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub scope: Scope,
    pub qg: String,
    pub qg_construct: String,
    pub topic: usize,
    pub label: String,
    pub topic_constructs: String,
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
    pub significant: bool,
    pub strength: String,
}

/// Inputs for the topic-vs-survey table.
pub struct ReportInputs<'a> {
    /// Topic indices eligible for analysis (excluded topics removed).
    pub topics: &'a [usize],
    pub meta: &'a TopicMetaTable,
    pub groups: &'a QuestionGroups,
    pub keyword_pairs: &'a BTreeSet<(usize, String)>,
    pub distributions: &'a BTreeMap<usize, BTreeMap<StateCode, f64>>,
    pub estimates: &'a BTreeMap<String, BTreeMap<StateCode, f64>>,
    pub p_method: PValueMethod,
}

/// Rows that could not be computed, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub scope: Scope,
    pub qg: String,
    pub topic: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationReport {
    pub rows: Vec<CorrelationRow>,
    pub skipped: Vec<SkippedPair>,
}

impl CorrelationReport {
    pub fn significant(&self, scope: Scope) -> impl Iterator<Item = &CorrelationRow> {
        self.rows.iter().filter(move |r| r.scope == scope && r.significant)
    }
}

fn group_construct(g: &QuestionGroup) -> String {
    g.construct.clone()
}

/// Spearman ρ for every in-scope (topic, QG) pair: keyword-mapped pairs
/// (plus pairs listed in the topic annotations) and all pairs of
/// construct-tagged topics with every group. Rows are sorted by
/// scope, then QG, then descending ρ.
pub fn correlation_report(inputs: &ReportInputs<'_>) -> CorrelationReport {
    let eligible: BTreeSet<usize> = inputs.topics.iter().copied().filter(|&t| !inputs.meta.is_excluded(t)).collect();
    let mut jobs: Vec<(Scope, usize, &QuestionGroup)> = Vec::new();
    for g in &inputs.groups.groups {
        for &t in &eligible {
            let mapped = inputs.meta.get(t).is_some_and(|m| m.question_groups.contains(&g.id));
            if mapped || inputs.keyword_pairs.contains(&(t, g.id.clone())) {
                jobs.push((Scope::Keyword, t, g));
            }
            if !inputs.meta.constructs(t).is_empty() {
                jobs.push((Scope::Construct, t, g));
            }
        }
    }
    let results: Vec<std::result::Result<CorrelationRow, SkippedPair>> = jobs
        .par_iter()
        .map(|&(scope, topic, g)| {
            let skip = |reason: String| SkippedPair { scope, qg: g.id.clone(), topic, reason };
            let dist = inputs.distributions.get(&topic).ok_or_else(|| skip("no state distribution".into()))?;
            let est = inputs.estimates.get(&g.id).ok_or_else(|| skip("no survey estimates".into()))?;
            let c = spearman_with(dist, est, inputs.p_method).map_err(|e| skip(e.to_string()))?;
            Ok(CorrelationRow {
                scope,
                qg: g.id.clone(),
                qg_construct: group_construct(g),
                topic,
                label: inputs.meta.label(topic),
                topic_constructs: inputs.meta.constructs(topic).join(";"),
                rho: c.coefficient,
                p_value: c.p_value,
                n: c.n,
                significant: c.p_value < SIGNIFICANCE,
                strength: strength_band(c.coefficient).to_string(),
            })
        })
        .collect();
    let mut report = CorrelationReport::default();
    for r in results {
        match r {
            Ok(row) => report.rows.push(row),
            Err(s) => report.skipped.push(s),
        }
    }
    report.rows.sort_by(|a, b| {
        a.scope.cmp(&b.scope).then(a.qg.cmp(&b.qg)).then(b.rho.total_cmp(&a.rho)).then(a.topic.cmp(&b.topic))
    });
    report
}

/// One row of the promotional-vs-consumer table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeCorrelationRow {
    pub topic: usize,
    pub label: String,
    pub r: f64,
    pub p_value: f64,
    pub n_months: usize,
    pub significant: bool,
    pub promotional_count: usize,
    pub promotional_pct: f64,
    pub consumer_count: usize,
    pub consumer_pct: f64,
}

/// Pearson correlation between promotional and consumer monthly volumes for
/// every eligible topic. Topics whose series is constant in either class are
/// returned separately. Rows are sorted by descending r.
pub fn volume_correlations(
    records: &[AnalysisRecord],
    topics: &[usize],
    meta: &TopicMetaTable,
    normalize: bool,
    p_method: PValueMethod,
) -> Result<(Vec<VolumeCorrelationRow>, Vec<usize>)> {
    let months = corpus_months(records)?;
    let promo: HashMap<usize, TopicShare> =
        topic_shares(records, MessageClass::Promotional).into_iter().map(|s| (s.topic, s)).collect();
    let cons: HashMap<usize, TopicShare> =
        topic_shares(records, MessageClass::Consumer).into_iter().map(|s| (s.topic, s)).collect();
    let eligible: Vec<usize> = topics.iter().copied().filter(|&t| !meta.is_excluded(t)).collect();
    let results: Vec<(usize, Option<VolumeCorrelationRow>)> = eligible
        .par_iter()
        .map(|&t| {
            let x = monthly_series(records, t, MessageClass::Promotional, &months, normalize).values();
            let y = monthly_series(records, t, MessageClass::Consumer, &months, normalize).values();
            let row = pearson_with(&x, &y, p_method).ok().map(|c| {
                let (pc, pp) = promo.get(&t).map(|s| (s.count, s.percentage)).unwrap_or((0, 0.0));
                let (cc, cp) = cons.get(&t).map(|s| (s.count, s.percentage)).unwrap_or((0, 0.0));
                VolumeCorrelationRow {
                    topic: t,
                    label: meta.label(t),
                    r: c.coefficient,
                    p_value: c.p_value,
                    n_months: c.n,
                    significant: c.p_value < SIGNIFICANCE,
                    promotional_count: pc,
                    promotional_pct: pp,
                    consumer_count: cc,
                    consumer_pct: cp,
                }
            });
            (t, row)
        })
        .collect();
    let mut rows = Vec::new();
    let mut undefined = Vec::new();
    for (t, r) in results {
        match r {
            Some(r) => rows.push(r),
            None => undefined.push(t),
        }
    }
    rows.sort_by(|a, b| b.r.total_cmp(&a.r).then(a.topic.cmp(&b.topic)));
    Ok((rows, undefined))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = crate::io::csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct ShareRow<'a> {
    class: &'a str,
    rank: usize,
    topic: usize,
    label: String,
    count: usize,
    percentage: String,
}

/// Writes ranked topic shares for both classes.
pub fn write_topic_shares(
    path: &Path,
    shares: &BTreeMap<MessageClass, Vec<TopicShare>>,
    meta: &TopicMetaTable,
) -> Result<()> {
    let mut rows = Vec::new();
    for (class, list) in shares {
        for (i, s) in list.iter().enumerate() {
            rows.push(ShareRow {
                class: class.as_str(),
                rank: i + 1,
                topic: s.topic,
                label: meta.label(s.topic),
                count: s.count,
                percentage: format!("{:.2}", s.percentage),
            });
        }
    }
    write_rows(path, &rows)
}

pub fn write_volume_correlations(path: &Path, rows: &[VolumeCorrelationRow]) -> Result<()> {
    write_rows(path, rows)
}

/// Writes `month,class,topic,value` rows for every eligible topic.
pub fn write_monthly_series(path: &Path, records: &[AnalysisRecord], topics: &[usize], normalize: bool) -> Result<()> {
    let months = corpus_months(records)?;
    let mut w = crate::io::csv_writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(["topic", "class", "month", "value"]).map_err(err)?;
    for &t in topics {
        for class in MessageClass::ALL {
            for (m, v) in monthly_series(records, t, class, &months, normalize).points {
                w.write_record([t.to_string(), class.to_string(), m, v.to_string()]).map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_correlation_report(path: &Path, report: &CorrelationReport) -> Result<()> {
    write_rows(path, &report.rows)
}

pub fn write_keyword_map(path: &Path, matches: &[KeywordMatch]) -> Result<()> {
    write_rows(path, matches)
}

/// Writes `topic,state,value` rows.
pub fn write_state_distributions(path: &Path, dists: &BTreeMap<usize, BTreeMap<StateCode, f64>>) -> Result<()> {
    let mut w = crate::io::csv_writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(["topic", "state", "value"]).map_err(err)?;
    for (t, m) in dists {
        for (s, v) in m {
            w.write_record([t.to_string(), s.code().to_string(), v.to_string()]).map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
