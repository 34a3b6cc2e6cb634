use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Tokens with corpus frequency at or below this are pruned.
pub const MIN_FREQUENCY_EXCLUSIVE: usize = 3;

#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines().map(|l| l.trim().to_lowercase()).filter(|l| !l.is_empty() && !l.starts_with('#')).collect(),
        )
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&crate::io::read_to_string(path)?))
    }

    pub fn extend<I: IntoIterator<Item = S>, S: AsRef<str>>(&mut self, words: I) {
        self.0.extend(words.into_iter().map(|w| w.as_ref().trim().to_lowercase()));
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Token ↔ index bijection. Indices follow lexicographic token order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    words: Vec<String>,
    frequencies: Vec<usize>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    words: Vec<String>,
    frequencies: Vec<usize>,
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabularyRepr) -> Result<Self> {
        Vocabulary::from_words(r.words, r.frequencies)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr { words: v.words, frequencies: v.frequencies }
    }
}

impl Vocabulary {
    pub fn from_words(words: Vec<String>, frequencies: Vec<usize>) -> Result<Self> {
        if words.len() != frequencies.len() {
            return Err(Error::Input("vocabulary words and frequencies differ in length".into()));
        }
        let index: HashMap<String, u32> = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        if index.len() != words.len() {
            return Err(Error::Input("vocabulary contains duplicate words".into()));
        }
        Ok(Vocabulary { words, frequencies, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn frequency(&self, i: usize) -> usize {
        self.frequencies[i]
    }

    pub fn frequencies(&self) -> &[usize] {
        &self.frequencies
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }
}

/// Documents re-expressed as vocabulary indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedCorpus {
    pub doc_ids: Vec<String>,
    pub docs: Vec<Vec<u32>>,
    pub vocab_size: usize,
}

impl IndexedCorpus {
    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct BuiltVocabulary {
    pub vocabulary: Vocabulary,
    pub corpus: IndexedCorpus,
    /// Ids of documents left with no tokens after pruning.
    pub dropped: Vec<String>,
}

/// Drops stopwords and tokens with corpus frequency ≤ 3, indexes the rest,
/// and removes documents that end up empty.
pub fn build_vocabulary<'a, I>(docs: I, stopwords: &Stopwords) -> Result<BuiltVocabulary>
where
    I: IntoIterator<Item = (&'a str, &'a [String])>,
{
    let docs: Vec<(&str, &[String])> = docs.into_iter().collect();
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, tokens) in &docs {
        for t in tokens.iter() {
            if !stopwords.contains(t) {
                *freq.entry(t.as_str()).or_insert(0) += 1;
            }
        }
    }
    let (words, freqs): (Vec<String>, Vec<usize>) =
        freq.into_iter().filter(|&(_, f)| f > MIN_FREQUENCY_EXCLUSIVE).map(|(w, f)| (w.to_string(), f)).unzip();
    if words.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let vocabulary = Vocabulary::from_words(words, freqs)?;
    let mut corpus = IndexedCorpus { doc_ids: Vec::new(), docs: Vec::new(), vocab_size: vocabulary.len() };
    let mut dropped = Vec::new();
    for (id, tokens) in docs {
        let indexed: Vec<u32> = tokens.iter().filter_map(|t| vocabulary.get(t)).collect();
        if indexed.is_empty() {
            dropped.push(id.to_string());
        } else {
            corpus.doc_ids.push(id.to_string());
            corpus.docs.push(indexed);
        }
    }
    Ok(BuiltVocabulary { vocabulary, corpus, dropped })
}
