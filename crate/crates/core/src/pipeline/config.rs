use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::topicmodel::{LdaConfig, DEFAULT_CUTOFF};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "one")]
    pub seed: u64,
    /// Worker cap; 0 uses every core.
    #[serde(default)]
    pub threads: usize,
    pub ingest: IngestConfig,
    pub geocode: GeocodeConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub lda: LdaStageConfig,
    pub analyze: AnalyzeConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    /// Globs of JSON-lines record files.
    pub inputs: Vec<String>,
    /// Keyword pattern file; the shipped list when absent.
    #[serde(default)]
    pub keywords: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeocodeConfig {
    pub gazetteer: PathBuf,
    #[serde(default = "default_radius")]
    pub radius_km: f64,
}

fn default_radius() -> f64 {
    crate::geocode::DEFAULT_RADIUS_KM
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    /// `id,label` gold annotations to evaluate against.
    #[serde(default)]
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaStageConfig {
    pub k: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    /// Defaults to the global seed.
    pub seed: Option<u64>,
    pub stopwords: Option<PathBuf>,
    pub extra_stopwords: Vec<String>,
    /// Train and analyze only messages resolved to a state.
    pub geocoded_only: bool,
    pub cutoff: f64,
    pub top_words: usize,
}

impl Default for LdaStageConfig {
    fn default() -> Self {
        let d = LdaConfig::default();
        LdaStageConfig {
            k: d.k,
            alpha: None,
            beta: d.beta,
            iterations: d.iterations,
            seed: None,
            stopwords: None,
            extra_stopwords: Vec::new(),
            geocoded_only: true,
            cutoff: DEFAULT_CUTOFF,
            top_words: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// Survey respondents CSV.
    pub survey: PathBuf,
    /// Question-group TOML; the shipped groups when absent.
    #[serde(default)]
    pub groups: Option<PathBuf>,
    /// Topic annotations CSV; every topic included when absent.
    #[serde(default)]
    pub meta: Option<PathBuf>,
    /// Correlate monthly shares instead of raw counts.
    #[serde(default)]
    pub normalize: bool,
    /// Use a seeded permutation test with this many permutations.
    #[serde(default)]
    pub permutations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// GeoJSON state boundaries; choropleths are skipped when absent.
    pub geometry: Option<PathBuf>,
    /// Topics to map; the top consumer topics when empty.
    pub topics: Vec<usize>,
    pub top_topics: usize,
    pub wordcloud_words: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { geometry: None, topics: Vec::new(), top_topics: 3, wordcloud_words: 10 }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// `section.key=value` assignments; values are parsed as TOML, falling
    /// back to a plain string.
    pub set: Vec<String>,
}

fn missing_key(e: &toml::de::Error) -> Option<String> {
    let msg = e.message();
    let start = msg.find("missing field `")? + "missing field `".len();
    let end = msg[start..].find('`')? + start;
    Some(msg[start..end].to_string())
}

fn apply_set(root: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) =
        assignment.split_once('=').ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        table = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{p}` is not a section")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl PipelineConfig {
    /// Parses the file text, applying overrides. Relative paths are
    /// resolved against `base`.
    pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("pipeline config: {e}")))?;
        for s in &overrides.set {
            apply_set(&mut table, s)?;
        }
        let mut cfg: PipelineConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| match missing_key(&e) {
                Some(k) => Error::Config(format!("pipeline config is missing required key `{k}`")),
                None => Error::Config(format!("pipeline config: {e}")),
            })?;
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(t) = overrides.threads {
            cfg.threads = t;
        }
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, overrides)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let fix_opt = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        for g in &mut self.ingest.inputs {
            if Path::new(g).is_relative() {
                *g = base.join(&*g).to_string_lossy().into_owned();
            }
        }
        fix_opt(&mut self.ingest.keywords);
        fix(&mut self.geocode.gazetteer);
        fix_opt(&mut self.classify.annotations);
        fix_opt(&mut self.lda.stopwords);
        fix(&mut self.analyze.survey);
        fix_opt(&mut self.analyze.groups);
        fix_opt(&mut self.analyze.meta);
        fix_opt(&mut self.report.geometry);
    }

    fn validate(&self) -> Result<()> {
        if self.ingest.inputs.is_empty() {
            return Err(Error::Config("ingest.inputs must list at least one file or glob".into()));
        }
        if !(self.geocode.radius_km > 0.0) {
            return Err(Error::Config("geocode.radius_km must be positive".into()));
        }
        if !(self.lda.cutoff > 0.0 && self.lda.cutoff < 1.0) {
            return Err(Error::Config("lda.cutoff must lie in (0, 1)".into()));
        }
        if self.lda.top_words == 0 || self.report.wordcloud_words == 0 {
            return Err(Error::Config("lda.top_words and report.wordcloud_words must be at least 1".into()));
        }
        if let Some(p) = self.analyze.permutations {
            if p == 0 || p > crate::analytics::MAX_PERMUTATIONS {
                return Err(Error::Config(format!(
                    "analyze.permutations must be in 1..={}",
                    crate::analytics::MAX_PERMUTATIONS
                )));
            }
        }
        self.lda_config().validate()
    }

    pub fn lda_config(&self) -> LdaConfig {
        LdaConfig {
            k: self.lda.k,
            alpha: self.lda.alpha,
            beta: self.lda.beta,
            iterations: self.lda.iterations,
            seed: self.lda.seed.unwrap_or(self.seed),
        }
    }
}
