//! Raw message records and the line-delimited JSON reader.
//!
//! Each input line is one JSON object:
//!
//! ```text
//! {"id": "1", "text": "...", "created_at": "2016-01-05T12:00:00Z",
//!  "lang": "en", "latitude": 29.65, "longitude": -82.32,
//!  "place_name": "Gainesville, FL", "user_location": "Florida",
//!  "is_quote": false, "is_retweet": false, "urls": ["https://..."],
//!  "source_tag": "dataset-a"}
//! ```
//!
//! Only `id`, `text` and `created_at` are required. `created_at` accepts
//! RFC 3339 or the classic `Wed Oct 10 20:19:24 +0000 2018` layout.

use std::io::BufRead;
use std::path::Path;
use std::sync::LazyLock;

use chrono::{DateTime, Datelike, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::io::open_reader;
use crate::{Error, Result};

static URL_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)(?:https?://|t\.co/)\S*").expect("valid regex"));

/// Returns true when the text contains a scheme-prefixed or `t.co/` URL.
pub fn contains_url(text: &str) -> bool {
    URL_RE.is_match(text)
}

/// Removes every URL substring.
pub(crate) fn strip_urls(text: &str) -> std::borrow::Cow<'_, str> {
    URL_RE.replace_all(text, " ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_location: Option<String>,
    pub is_quote: bool,
    /// Retweet flag as carried by the record metadata.
    pub is_retweet: bool,
    /// Any URL in the raw text or URL-entity list.
    pub has_url: bool,
    pub source_tag: String,
}

impl MessageRecord {
    pub fn coordinates(&self) -> Option<(f64, f64)> {
        self.latitude.zip(self.longitude)
    }

    /// UTC calendar month, e.g. `2016-01`.
    pub fn month_key(&self) -> String {
        month_key(&self.created_at)
    }
}

pub fn month_key(t: &DateTime<Utc>) -> String {
    format!("{:04}-{:02}", t.year(), t.month())
}

/// Wire shape of one input line.
#[derive(Debug, Deserialize)]
struct RawRecord {
    #[serde(deserialize_with = "de_id")]
    id: String,
    text: String,
    #[serde(default)]
    lang: Option<String>,
    created_at: String,
    #[serde(default)]
    latitude: Option<f64>,
    #[serde(default)]
    longitude: Option<f64>,
    #[serde(default)]
    place_name: Option<String>,
    #[serde(default)]
    user_location: Option<String>,
    #[serde(default)]
    is_quote: bool,
    #[serde(default)]
    is_retweet: bool,
    #[serde(default)]
    urls: Vec<String>,
    #[serde(default)]
    source_tag: Option<String>,
}

fn de_id<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        S(String),
        N(u64),
    }
    Ok(match Id::deserialize(d)? {
        Id::S(s) => s,
        Id::N(n) => n.to_string(),
    })
}

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    if let Ok(t) = DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y") {
        return Some(t.with_timezone(&Utc));
    }
    chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").ok().map(|n| n.and_utc())
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|v| !v.trim().is_empty())
}

impl RawRecord {
    fn into_record(self, default_tag: &str) -> std::result::Result<MessageRecord, String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        let created_at =
            parse_timestamp(&self.created_at).ok_or_else(|| format!("unparseable created_at `{}`", self.created_at))?;
        if let Some(lat) = self.latitude {
            if !(-90.0..=90.0).contains(&lat) {
                return Err(format!("latitude {lat} out of range"));
            }
        }
        if let Some(lon) = self.longitude {
            if !(-180.0..=180.0).contains(&lon) {
                return Err(format!("longitude {lon} out of range"));
            }
        }
        let has_url = contains_url(&self.text) || !self.urls.is_empty();
        Ok(MessageRecord {
            id: self.id,
            has_url,
            text: self.text,
            lang: non_empty(self.lang),
            created_at,
            latitude: self.latitude,
            longitude: self.longitude,
            place_name: non_empty(self.place_name),
            user_location: non_empty(self.user_location),
            is_quote: self.is_quote,
            is_retweet: self.is_retweet,
            source_tag: non_empty(self.source_tag).unwrap_or_else(|| default_tag.to_string()),
        })
    }
}

/// Records parsed from one file plus the tally of skipped lines.
#[derive(Debug, Default)]
pub struct ParsedFile {
    pub records: Vec<MessageRecord>,
    pub malformed: usize,
}

/// Parses one record line. `default_tag` fills in a missing `source_tag`.
pub fn parse_line(line: &str, default_tag: &str) -> std::result::Result<MessageRecord, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    raw.into_record(default_tag)
}

/// Reads a JSON-lines record file (optionally gzip-compressed).
pub fn parse_records(path: &Path) -> Result<ParsedFile> {
    let tag = source_tag_for(path);
    parse_reader(open_reader(path)?, &tag, path)
}

pub(crate) fn parse_reader(reader: impl BufRead, tag: &str, path: &Path) -> Result<ParsedFile> {
    let mut out = ParsedFile::default();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line, tag) {
            Ok(r) => out.records.push(r),
            Err(why) => {
                log::warn!("{}:{}: skipping malformed record: {why}", path.display(), lineno + 1);
                out.malformed += 1;
            }
        }
    }
    Ok(out)
}

fn source_tag_for(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.trim_end_matches(".gz").trim_end_matches(".jsonl").trim_end_matches(".json").to_string()
}
