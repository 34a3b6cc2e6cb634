//! Keyword relevance patterns.
//!
//! A pattern is one or more clauses joined by `+`; every clause must match.
//! A clause is a word, a multi-word phrase (consecutive words), or a word
//! prefix written with a trailing `*`. Matching is case-insensitive and on
//! word boundaries, so `vaccin*` matches "vaccination" but not "antivaccine".

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Clause {
    Phrase(Vec<String>),
    Prefix(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordPattern {
    source: String,
    clauses: Vec<Clause>,
}

impl FromStr for KeywordPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut clauses = Vec::new();
        for part in s.split('+') {
            let part = part.trim().to_lowercase();
            if part.is_empty() {
                return Err(Error::Config(format!("empty clause in keyword pattern `{s}`")));
            }
            if let Some(prefix) = part.strip_suffix('*') {
                let prefix = prefix.trim();
                if prefix.is_empty() || prefix.contains(char::is_whitespace) {
                    return Err(Error::Config(format!("bad wildcard clause in `{s}`")));
                }
                clauses.push(Clause::Prefix(prefix.to_string()));
            } else {
                clauses.push(Clause::Phrase(words(&part)));
            }
        }
        Ok(KeywordPattern { source: s.trim().to_string(), clauses })
    }
}

impl fmt::Display for KeywordPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

/// Lowercased alphanumeric words of `text`.
pub(crate) fn words(text: &str) -> Vec<String> {
    text.to_lowercase().split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_string).collect()
}

impl KeywordPattern {
    fn matches_words(&self, words: &[String]) -> bool {
        self.clauses.iter().all(|c| match c {
            Clause::Prefix(p) => words.iter().any(|w| w.starts_with(p.as_str())),
            Clause::Phrase(phrase) => {
                !phrase.is_empty() && words.windows(phrase.len()).any(|win| win == phrase.as_slice())
            }
        })
    }

    pub fn matches(&self, text: &str) -> bool {
        self.matches_words(&words(text))
    }
}

pub const DEFAULT_KEYWORDS: &str = include_str!("../../data/keywords.txt");

/// A non-empty set of patterns; a text is relevant if any pattern matches.
#[derive(Debug, Clone)]
pub struct KeywordSet(Vec<KeywordPattern>);

impl KeywordSet {
    pub fn new(patterns: Vec<KeywordPattern>) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::Config("keyword pattern list is empty".into()));
        }
        Ok(KeywordSet(patterns))
    }

    pub fn parse_lines(text: &str) -> Result<Self> {
        let patterns = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with("//"))
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(patterns)
    }

    /// The shipped collection keywords.
    pub fn builtin() -> Self {
        Self::parse_lines(DEFAULT_KEYWORDS).expect("shipped keywords are valid")
    }

    /// One pattern per line; blank lines and `//` comments are ignored.
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_lines(&crate::io::read_to_string(path)?)
    }

    pub fn patterns(&self) -> &[KeywordPattern] {
        &self.0
    }

    pub fn is_relevant(&self, text: &str) -> bool {
        let w = words(text);
        self.0.iter().any(|p| p.matches_words(&w))
    }
}
