//! Vocabulary construction, LDA training, K selection and topic assignment.

mod assign;
mod lda;
mod metrics;
mod vocab;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use assign::{
    assign_topics, calibration_sample, calibration_score, count_assigned, read_assignments, read_review_sheet,
    select_cutoff, write_assignments, write_review_sheet, CalibrationScore, ReviewRow, TopicAssignment, TopicMeta,
    TopicMetaTable, DEFAULT_ADEQUACY_THRESHOLD, DEFAULT_CUTOFF,
};
pub use lda::{train, GibbsSampler, LdaConfig, LdaModel, MODEL_FORMAT, MODEL_VERSION};
pub use metrics::{
    arun2010, cao2009, cosine, derived_seed, deveaud2014, jensen_shannon, model_metrics, select_k, singular_values,
    KSelectionRow,
};
pub use vocab::{
    build_vocabulary, BuiltVocabulary, IndexedCorpus, Stopwords, Vocabulary, DEFAULT_STOPWORDS, MIN_FREQUENCY_EXCLUSIVE,
};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWords {
    pub topic: usize,
    pub words: Vec<WordWeight>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordWeight {
    pub word: String,
    pub weight: f64,
}

pub fn top_words_table(model: &LdaModel, n: usize) -> Vec<TopicWords> {
    (0..model.k())
        .map(|topic| TopicWords {
            topic,
            words: model.top_words(topic, n).into_iter().map(|(word, weight)| WordWeight { word, weight }).collect(),
        })
        .collect()
}

pub fn write_top_words(path: &Path, model: &LdaModel, n: usize) -> Result<()> {
    crate::io::write_json(path, &top_words_table(model, n))
}

pub fn write_k_selection(path: &Path, rows: &[KSelectionRow]) -> Result<()> {
    let mut w = crate::io::csv_writer(path)?;
    let err = |e| crate::Error::csv(path, e);
    w.write_record(["k", "arun2010", "cao2009", "deveaud2014"]).map_err(err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into());
    for r in rows {
        w.write_record([r.k.to_string(), r.arun.to_string(), opt(r.cao), opt(r.deveaud)]).map_err(err)?;
    }
    w.flush().map_err(|e| crate::Error::io(path, e))
}
