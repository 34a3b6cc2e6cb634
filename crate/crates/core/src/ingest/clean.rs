use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::record::{strip_urls, MessageRecord};
use crate::classify::MessageClass;
use crate::StateCode;

/// A cleaned message as it flows through the later stages. Geocoding and
/// classification fill in `state` and `class`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanMessage {
    pub id: String,
    /// Raw text, kept for retweet detection and review sheets.
    pub text: String,
    pub tokens: Vec<String>,
    pub month_key: String,
    pub created_at: DateTime<Utc>,
    pub has_url: bool,
    pub is_quote: bool,
    pub is_retweet: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_location: Option<String>,
    pub source_tag: String,
    #[serde(default)]
    pub state: Option<StateCode>,
    #[serde(default)]
    pub class: Option<MessageClass>,
}

impl CleanMessage {
    /// Messages with no tokens left after cleaning are kept for volume
    /// counts but never reach the topic model.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn coordinates(&self) -> Option<(f64, f64)> {
        self.latitude.zip(self.longitude)
    }
}

/// Tokenizes message text: URLs removed, `@mentions` dropped, `#` stripped
/// from hashtags, lowercased, split on whitespace with surrounding
/// punctuation trimmed.
pub fn tokenize(text: &str) -> Vec<String> {
    let without_urls = strip_urls(text);
    without_urls
        .split_whitespace()
        .filter(|t| !t.starts_with('@'))
        .filter_map(|t| {
            let t: String = t.chars().filter(|&c| c != '#').collect::<String>().to_lowercase();
            let t = t.trim_matches(|c: char| !c.is_alphanumeric());
            (!t.is_empty() && !t.contains('@')).then(|| t.to_string())
        })
        .collect()
}

pub fn clean_text(record: &MessageRecord) -> CleanMessage {
    CleanMessage {
        id: record.id.clone(),
        text: record.text.clone(),
        tokens: tokenize(&record.text),
        month_key: record.month_key(),
        created_at: record.created_at,
        has_url: record.has_url,
        is_quote: record.is_quote,
        is_retweet: record.is_retweet,
        latitude: record.latitude,
        longitude: record.longitude,
        place_name: record.place_name.clone(),
        user_location: record.user_location.clone(),
        source_tag: record.source_tag.clone(),
        state: None,
        class: None,
    }
}
