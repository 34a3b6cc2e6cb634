//! Parsing, merging, relevance and language filtering, and text cleaning of
//! raw message records.

mod clean;
pub mod langdetect;
mod record;
mod relevance;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use clean::{clean_text, tokenize, CleanMessage};
pub use langdetect::{Detection, LanguageDetector};
pub use record::{contains_url, month_key, parse_line, parse_records, parse_timestamp, MessageRecord, ParsedFile};
pub use relevance::{KeywordPattern, KeywordSet, DEFAULT_KEYWORDS};

use crate::{Error, Result};

/// Anything deduplicated by a string key.
pub trait Keyed {
    fn key(&self) -> &str;
}

impl Keyed for MessageRecord {
    fn key(&self) -> &str {
        &self.id
    }
}

/// Concatenates datasets in order and keeps the first record seen for every
/// id. Returns the survivors and the number of duplicates dropped.
pub fn merge_dedup<T: Keyed>(datasets: Vec<Vec<T>>) -> (Vec<T>, usize) {
    let total: usize = datasets.iter().map(Vec::len).sum();
    let mut seen: HashSet<String> = HashSet::with_capacity(total);
    let mut out = Vec::with_capacity(total);
    for record in datasets.into_iter().flatten() {
        if !seen.contains(record.key()) {
            seen.insert(record.key().to_string());
            out.push(record);
        }
    }
    let dropped = total - out.len();
    (out, dropped)
}

pub fn relevance_filter(records: Vec<MessageRecord>, keywords: &KeywordSet) -> Vec<MessageRecord> {
    records.into_par_iter().filter(|r| keywords.is_relevant(&r.text)).collect()
}

/// Routes by the record's `lang` field when present, otherwise by the
/// detector. Returns `(english, other)`.
pub fn language_filter(
    records: Vec<MessageRecord>,
    detector: &LanguageDetector,
) -> (Vec<MessageRecord>, Vec<MessageRecord>) {
    let keep: Vec<bool> = records
        .par_iter()
        .map(|r| match r.lang.as_deref() {
            Some(lang) => lang.eq_ignore_ascii_case("en"),
            None => detector.detect(&r.text).lang.as_deref() == Some("en"),
        })
        .collect();
    let mut english = Vec::new();
    let mut other = Vec::new();
    for (r, k) in records.into_iter().zip(keep) {
        if k {
            english.push(r);
        } else {
            other.push(r);
        }
    }
    (english, other)
}

/// Per-stage counts written next to the cleaned corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub files: usize,
    pub parsed: usize,
    pub malformed: usize,
    pub duplicates: usize,
    pub after_dedup: usize,
    pub irrelevant: usize,
    pub non_english: usize,
    pub retained: usize,
    pub empty_after_cleaning: usize,
}

/// Expands a glob (or plain path) into a sorted list of files.
pub fn expand_inputs(pattern: &str) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| Error::Config(format!("bad input glob `{pattern}`: {e}")))?
        .filter_map(|p| p.ok())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Input(format!("no input files match `{pattern}`")));
    }
    Ok(paths)
}

/// The full ingest stage over a list of files.
pub fn ingest_files(
    files: &[PathBuf],
    keywords: &KeywordSet,
    detector: &LanguageDetector,
) -> Result<(Vec<CleanMessage>, IngestReport)> {
    let mut report = IngestReport { files: files.len(), ..Default::default() };
    let mut datasets = Vec::with_capacity(files.len());
    for f in files {
        let parsed = parse_records(f)?;
        report.parsed += parsed.records.len();
        report.malformed += parsed.malformed;
        datasets.push(parsed.records);
    }
    let (merged, dups) = merge_dedup(datasets);
    report.duplicates = dups;
    report.after_dedup = merged.len();
    let relevant = relevance_filter(merged, keywords);
    report.irrelevant = report.after_dedup - relevant.len();
    let (english, other) = language_filter(relevant, detector);
    report.non_english = other.len();
    let cleaned: Vec<CleanMessage> = english.par_iter().map(clean_text).collect();
    report.retained = cleaned.len();
    report.empty_after_cleaning = cleaned.iter().filter(|m| m.is_empty()).count();
    Ok((cleaned, report))
}

pub fn write_corpus(path: &Path, corpus: &[CleanMessage]) -> Result<()> {
    crate::io::write_jsonl(path, corpus)
}

pub fn read_corpus(path: &Path) -> Result<Vec<CleanMessage>> {
    crate::io::read_jsonl(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: &str, text: &str) -> MessageRecord {
        parse_line(&format!(r#"{{"id":"{id}","text":"{text}","created_at":"2016-01-01T00:00:00Z"}}"#), "t").unwrap()
    }

    fn rec_lang(id: &str, text: &str, lang: &str) -> MessageRecord {
        MessageRecord { lang: Some(lang.to_string()), ..rec(id, text) }
    }

    #[test]
    fn dedup_first_seen_wins() {
        let a = vec![rec("7", "first")];
        let b = vec![rec("7", "second")];
        let (out, dups) = merge_dedup(vec![a, b]);
        assert_eq!(out.len(), 1);
        assert_eq!(dups, 1);
        assert_eq!(out[0].text, "first");
    }

    #[test]
    fn dedup_disjoint() {
        let a: Vec<_> = (0..3).map(|i| rec(&i.to_string(), "x")).collect();
        let b: Vec<_> = (3..7).map(|i| rec(&i.to_string(), "x")).collect();
        assert_eq!(merge_dedup(vec![a, b]).0.len(), 7);
    }

    #[test]
    fn language_routing_by_field() {
        let records = vec![
            rec_lang("1", "la vacuna", "en"),
            rec_lang("2", "hpv vaccine", "es"),
            rec("3", "la vacuna contra el virus del papiloma humano es segura y eficaz"),
            rec("4", "the vaccine against the human papilloma virus is safe and effective"),
        ];
        let (en, other) = language_filter(records, LanguageDetector::builtin());
        let ids = |v: &[MessageRecord]| v.iter().map(|r| r.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&en), ["1", "4"]);
        assert_eq!(ids(&other), ["2", "3"]);
    }

    #[test]
    fn relevance_keeps_matches() {
        let kw = KeywordSet::parse_lines("gardasil\nhpv + vaccin*").unwrap();
        let out = relevance_filter(
            vec![rec("1", "gardasil works"), rec("2", "flu season"), rec("3", "the hpv vaccination drive")],
            &kw,
        );
        assert_eq!(out.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["1", "3"]);
    }

    proptest! {
        #[test]
        fn dedup_idempotent(ids in proptest::collection::vec(0u8..20, 0..40), split in 0usize..40) {
            let recs: Vec<_> = ids.iter().map(|i| rec(&i.to_string(), "x")).collect();
            let split = split.min(recs.len());
            let (a, b) = recs.split_at(split);
            let (once, dropped) = merge_dedup(vec![a.to_vec(), b.to_vec()]);
            prop_assert_eq!(once.len() + dropped, ids.len());
            let (twice, dropped2) = merge_dedup(vec![once.clone()]);
            prop_assert_eq!(dropped2, 0);
            prop_assert_eq!(twice, once);
        }

        #[test]
        fn language_partition(texts in proptest::collection::vec("[a-zé ]{0,30}", 0..20)) {
            let n = texts.len();
            let recs: Vec<_> = texts.iter().enumerate().map(|(i, t)| rec(&i.to_string(), t)).collect();
            let (en, other) = language_filter(recs, LanguageDetector::builtin());
            prop_assert_eq!(en.len() + other.len(), n);
        }

        #[test]
        fn relevance_monotone(texts in proptest::collection::vec("(hpv|gardasil|flu|vaccine|shot| )+", 1..20)) {
            let recs: Vec<_> = texts.iter().enumerate().map(|(i, t)| rec(&i.to_string(), t)).collect();
            let small = KeywordSet::parse_lines("gardasil").unwrap();
            let big = KeywordSet::parse_lines("gardasil\nhpv + vaccin*").unwrap();
            let a = relevance_filter(recs.clone(), &small);
            let b = relevance_filter(recs, &big);
            prop_assert!(a.iter().all(|r| b.iter().any(|s| s.id == r.id)));
        }
    }
}
