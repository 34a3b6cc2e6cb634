//! Weighted survey respondents, question groups, and state-level
//! population estimates.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, StateCode};

/// Question-group configuration shipped for the five HPV question groups.
pub const DEFAULT_GROUPS: &str = include_str!("../data/question_groups.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRespondent {
    pub id: String,
    pub state: StateCode,
    pub weight: f64,
    pub answers: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    #[serde(default)]
    pub text: String,
    /// Answer codes that count as "of interest".
    pub interested: Vec<String>,
    /// Key terms matched against topic top words.
    #[serde(default)]
    pub keywords: Vec<String>,
}

impl Question {
    pub fn is_interested(&self, answer: &str) -> bool {
        let a = answer.trim();
        self.interested.iter().any(|i| i.trim().eq_ignore_ascii_case(a))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionGroup {
    pub id: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub construct: String,
    #[serde(rename = "question")]
    pub questions: Vec<Question>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionGroups {
    #[serde(rename = "group")]
    pub groups: Vec<QuestionGroup>,
}

impl QuestionGroups {
    pub fn parse(text: &str) -> Result<Self> {
        let groups: QuestionGroups =
            toml::from_str(text).map_err(|e| Error::Config(format!("question groups: {e}")))?;
        groups.validate()?;
        Ok(groups)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&crate::io::read_to_string(path)?)
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_GROUPS).expect("shipped question groups are valid")
    }

    fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for g in &self.groups {
            if !ids.insert(g.id.as_str()) {
                return Err(Error::Config(format!("duplicate question group `{}`", g.id)));
            }
            if g.questions.is_empty() {
                return Err(Error::Config(format!("question group `{}` has no questions", g.id)));
            }
            for q in &g.questions {
                if q.interested.is_empty() {
                    return Err(Error::Config(format!("question `{}` in `{}` has no interested answers", q.id, g.id)));
                }
                if q.keywords.iter().all(|k| k.trim().is_empty()) {
                    return Err(Error::Config(format!("question `{}` in `{}` has an empty keyword set", q.id, g.id)));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&QuestionGroup> {
        self.groups.iter().find(|g| g.id == id)
    }
}

/// Respondents plus the number of rows that were skipped.
#[derive(Debug, Clone, Default)]
pub struct LoadedRespondents {
    pub respondents: Vec<SurveyRespondent>,
    pub skipped: usize,
}

/// Reads a CSV with `id`, `state`, `weight` columns and one column per
/// question. Rows with a missing/unknown state or a non-positive weight are
/// skipped; empty answer cells are treated as missing answers.
pub fn load_respondents(path: &Path) -> Result<LoadedRespondents> {
    let mut rdr = crate::io::csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Input(format!("{}: missing required column `{name}`", path.display())))
    };
    let (id_col, state_col, weight_col) = (col("id")?, col("state")?, col("weight")?);
    let mut out = LoadedRespondents::default();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let state = row.get(state_col).and_then(|s| s.parse::<StateCode>().ok());
        let weight = row.get(weight_col).and_then(|w| w.parse::<f64>().ok());
        let (Some(state), Some(weight)) = (state, weight) else {
            out.skipped += 1;
            continue;
        };
        if !(weight > 0.0 && weight.is_finite()) {
            out.skipped += 1;
            continue;
        }
        let answers = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| ![id_col, state_col, weight_col].contains(i))
            .filter_map(|(i, h)| {
                let v = row.get(i)?.trim();
                (!v.is_empty()).then(|| (h.to_string(), v.to_string()))
            })
            .collect();
        out.respondents.push(SurveyRespondent {
            id: row.get(id_col).unwrap_or_default().to_string(),
            state,
            weight,
            answers,
        });
    }
    Ok(out)
}

/// Writes respondents with the given question columns (in order).
pub fn write_respondents(path: &Path, respondents: &[SurveyRespondent], questions: &[String]) -> Result<()> {
    let mut w = crate::io::csv_writer(path)?;
    let mut header = vec!["id".to_string(), "state".into(), "weight".into()];
    header.extend(questions.iter().cloned());
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for r in respondents {
        let mut row = vec![r.id.clone(), r.state.code().to_string(), r.weight.to_string()];
        row.extend(questions.iter().map(|q| r.answers.get(q).cloned().unwrap_or_default()));
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// True iff any member question was answered with an interested code.
pub fn group_indicator(respondent: &SurveyRespondent, qg: &QuestionGroup) -> bool {
    qg.questions.iter().any(|q| respondent.answers.get(&q.id).is_some_and(|a| q.is_interested(a)))
}

/// Weighted share of respondents per state whose group indicator is true.
pub fn state_estimates(respondents: &[SurveyRespondent], qg: &QuestionGroup) -> BTreeMap<StateCode, f64> {
    let mut sums: BTreeMap<StateCode, (f64, f64)> = BTreeMap::new();
    for r in respondents {
        let e = sums.entry(r.state).or_insert((0.0, 0.0));
        e.1 += r.weight;
        if group_indicator(r, qg) {
            e.0 += r.weight;
        }
    }
    sums.into_iter().map(|(s, (hit, total))| (s, (hit / total).clamp(0.0, 1.0))).collect()
}

/// Writes `qg,state,estimate` rows.
pub fn write_estimates(path: &Path, estimates: &BTreeMap<String, BTreeMap<StateCode, f64>>) -> Result<()> {
    let mut w = crate::io::csv_writer(path)?;
    w.write_record(["qg", "state", "estimate"]).map_err(|e| Error::csv(path, e))?;
    for (qg, per_state) in estimates {
        for (s, v) in per_state {
            w.write_record([qg.as_str(), s.code(), &v.to_string()]).map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
