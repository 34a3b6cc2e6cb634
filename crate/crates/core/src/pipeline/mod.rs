//! End-to-end batch run: ingest → geocode → classify → lda → analyze →
//! report, with per-stage caching keyed on content hashes.
//!
//! Every stage writes its artifacts under `<out>/<stage>/` and a single
//! `manifest.json` records, per stage, the cache key, parameter hash, seed,
//! row counts and artifact hashes. A stage is skipped when its key matches
//! the previous manifest and its artifacts are intact. The manifest holds no
//! paths and no run-specific state, so identical inputs give a
//! byte-identical output directory.

mod config;

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{
    AnalyzeConfig, ClassifyConfig, GeocodeConfig, IngestConfig, LdaStageConfig, Overrides, PipelineConfig, ReportConfig,
};

use crate::analytics::{self, PValueMethod, Scope};
use crate::classify::MessageClass;
use crate::classify::{self as classifier, AnnotationSet};
use crate::geocode::{Gazetteer, Geocoder};
use crate::ingest::{self, CleanMessage, KeywordSet, LanguageDetector};
use crate::report::{self, Choropleth, StateShape};
use crate::survey::{self, QuestionGroups};
use crate::topicmodel::{self, Stopwords, TopicMetaTable, TopicWords};
use crate::{Error, Result, StateCode};

pub const MANIFEST_FORMAT: &str = "topicsurvey-manifest";
pub const MANIFEST_VERSION: u32 = 1;
/// Bumped whenever a stage's outputs change for the same inputs.
const STAGE_VERSION: u32 = 1;

pub const STAGES: [&str; 6] = ["ingest", "geocode", "classify", "lda", "analyze", "report"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub key: String,
    pub params_hash: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub counts: BTreeMap<String, u64>,
    /// Artifact path relative to the output directory → SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
}

impl Manifest {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }
}

/// What a run did; cache hits are reported here and never written out.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub cache_hits: Vec<&'static str>,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

fn optional_file_hash(path: Option<&PathBuf>) -> Result<String> {
    match path {
        Some(p) => sha256_file(p),
        None => Ok("builtin".into()),
    }
}

struct StageSpec {
    name: &'static str,
    params: Value,
    inputs: Vec<String>,
    seed: Option<u64>,
}

struct Runner<'a> {
    out: &'a Path,
    previous: Option<Manifest>,
    records: Vec<StageRecord>,
    cache_hits: Vec<&'static str>,
}

pub type Counts = BTreeMap<String, u64>;

impl Runner<'_> {
    fn artifact_hash(&self, name: &str, artifact: &str) -> Result<String> {
        self.records
            .iter()
            .find(|r| r.name == name)
            .and_then(|r| r.artifacts.get(artifact).cloned())
            .ok_or_else(|| Error::Input(format!("stage {name} did not produce {artifact}")))
    }

    fn cached(&self, name: &str, key: &str) -> Option<StageRecord> {
        let prev = self.previous.as_ref()?.stage(name)?;
        if prev.key != key {
            return None;
        }
        for (rel, hash) in &prev.artifacts {
            if sha256_file(&self.out.join(rel)).ok().as_deref() != Some(hash.as_str()) {
                return None;
            }
        }
        Some(prev.clone())
    }

    fn run(&mut self, spec: StageSpec, body: impl FnOnce(&Path) -> Result<(Counts, Vec<String>)>) -> Result<()> {
        let wrap = |e: Error| Error::Stage { stage: spec.name, source: Box::new(e) };
        let params_hash = sha256_bytes(spec.params.to_string().as_bytes());
        let key_material = json!({
            "stage": spec.name,
            "version": STAGE_VERSION,
            "params": params_hash,
            "inputs": spec.inputs,
            "seed": spec.seed,
        });
        let key = sha256_bytes(key_material.to_string().as_bytes());
        if let Some(rec) = self.cached(spec.name, &key) {
            log::info!("stage {}: cache hit", spec.name);
            self.cache_hits.push(spec.name);
            self.records.push(rec);
            return Ok(());
        }
        log::info!("stage {}: running", spec.name);
        let (counts, artifacts) = body(self.out).map_err(wrap)?;
        let mut hashes = BTreeMap::new();
        for rel in artifacts {
            let h = sha256_file(&self.out.join(&rel)).map_err(wrap)?;
            hashes.insert(rel, h);
        }
        self.records.push(StageRecord {
            name: spec.name.to_string(),
            key,
            params_hash,
            seed: spec.seed,
            counts,
            artifacts: hashes,
        });
        Ok(())
    }
}

fn counts<const N: usize>(pairs: [(&str, usize); N]) -> Counts {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v as u64)).collect()
}

/// Runs every stage into `out`, honouring the thread cap.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<RunSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_stages(cfg, out))
}

fn manifest_path(out: &Path) -> PathBuf {
    out.join("manifest.json")
}

fn run_stages(cfg: &PipelineConfig, out: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let previous = crate::io::read_json::<Manifest>(&manifest_path(out)).ok();
    let mut r = Runner { out, previous, records: Vec::new(), cache_hits: Vec::new() };

    // ingest
    let mut files = Vec::new();
    for pattern in &cfg.ingest.inputs {
        files
            .extend(ingest::expand_inputs(pattern).map_err(|e| Error::Stage { stage: "ingest", source: Box::new(e) })?);
    }
    files.sort();
    files.dedup();
    let mut inputs = files.iter().map(|f| sha256_file(f)).collect::<Result<Vec<_>>>()?;
    inputs.push(optional_file_hash(cfg.ingest.keywords.as_ref())?);
    r.run(StageSpec { name: "ingest", params: json!({}), inputs, seed: None }, |out| {
        let keywords = match &cfg.ingest.keywords {
            Some(p) => KeywordSet::load(p)?,
            None => KeywordSet::builtin(),
        };
        let (corpus, report) = ingest::ingest_files(&files, &keywords, LanguageDetector::builtin())?;
        ingest::write_corpus(&out.join("ingest/corpus.jsonl"), &corpus)?;
        crate::io::write_json(&out.join("ingest/report.json"), &report)?;
        Ok((
            counts([
                ("files", report.files),
                ("parsed", report.parsed),
                ("malformed", report.malformed),
                ("duplicates", report.duplicates),
                ("after_dedup", report.after_dedup),
                ("irrelevant", report.irrelevant),
                ("non_english", report.non_english),
                ("retained", report.retained),
                ("empty_after_cleaning", report.empty_after_cleaning),
            ]),
            vec!["ingest/corpus.jsonl".into(), "ingest/report.json".into()],
        ))
    })?;

    // geocode
    let inputs = vec![
        r.artifact_hash("ingest", "ingest/corpus.jsonl")?,
        sha256_file(&cfg.geocode.gazetteer).map_err(|e| Error::Stage { stage: "geocode", source: Box::new(e) })?,
    ];
    r.run(
        StageSpec { name: "geocode", params: json!({ "radius_km": cfg.geocode.radius_km }), inputs, seed: None },
        |out| {
            let mut corpus = ingest::read_corpus(&out.join("ingest/corpus.jsonl"))?;
            let geocoder =
                Geocoder::new(Gazetteer::load(&cfg.geocode.gazetteer)?).with_radius_km(cfg.geocode.radius_km);
            let stats = geocoder.geocode_corpus(&mut corpus);
            ingest::write_corpus(&out.join("geocode/corpus.jsonl"), &corpus)?;
            crate::io::write_json(&out.join("geocode/stats.json"), &stats)?;
            Ok((
                counts([
                    ("total", stats.total),
                    ("resolved", stats.total - stats.unresolved),
                    ("coordinates", stats.coordinates),
                    ("place", stats.place),
                    ("user_location", stats.user_location),
                    ("unresolved", stats.unresolved),
                ]),
                vec!["geocode/corpus.jsonl".into(), "geocode/stats.json".into()],
            ))
        },
    )?;

    // classify
    let inputs = vec![
        r.artifact_hash("geocode", "geocode/corpus.jsonl")?,
        optional_file_hash(cfg.classify.annotations.as_ref())?,
    ];
    r.run(StageSpec { name: "classify", params: json!({}), inputs, seed: None }, |out| {
        let mut corpus = ingest::read_corpus(&out.join("geocode/corpus.jsonl"))?;
        classifier::classify_corpus(&mut corpus);
        let n_promo = corpus.iter().filter(|m| m.class == Some(MessageClass::Promotional)).count();
        let evaluation = match &cfg.classify.annotations {
            Some(p) => {
                let gold = AnnotationSet::load(p)?;
                let preds: HashMap<String, MessageClass> =
                    corpus.iter().filter_map(|m| Some((m.id.clone(), m.class?))).collect();
                Some(classifier::evaluate(&preds, &gold)?)
            }
            None => None,
        };
        ingest::write_corpus(&out.join("classify/corpus.jsonl"), &corpus)?;
        crate::io::write_json(
            &out.join("classify/summary.json"),
            &json!({
                "total": corpus.len(),
                "promotional": n_promo,
                "consumer": corpus.len() - n_promo,
                "evaluation": evaluation,
            }),
        )?;
        Ok((
            counts([("total", corpus.len()), ("promotional", n_promo), ("consumer", corpus.len() - n_promo)]),
            vec!["classify/corpus.jsonl".into(), "classify/summary.json".into()],
        ))
    })?;

    // lda
    let lda_cfg = cfg.lda_config();
    let inputs =
        vec![r.artifact_hash("classify", "classify/corpus.jsonl")?, optional_file_hash(cfg.lda.stopwords.as_ref())?];
    r.run(
        StageSpec {
            name: "lda",
            params: json!({
                "k": lda_cfg.k,
                "alpha": lda_cfg.alpha(),
                "beta": lda_cfg.beta,
                "iterations": lda_cfg.iterations,
                "extra_stopwords": cfg.lda.extra_stopwords,
                "geocoded_only": cfg.lda.geocoded_only,
                "cutoff": cfg.lda.cutoff,
                "top_words": cfg.lda.top_words,
            }),
            inputs,
            seed: Some(lda_cfg.seed),
        },
        |out| {
            let corpus = ingest::read_corpus(&out.join("classify/corpus.jsonl"))?;
            let stop = stopword_list(cfg.lda.stopwords.as_deref(), &cfg.lda.extra_stopwords)?;
            let (candidates, built) = training_set(&corpus, &stop, cfg.lda.geocoded_only)?;
            if lda_cfg.k > built.corpus.total_tokens() {
                log::warn!(
                    "K = {} exceeds the {} training tokens; the model will be degenerate",
                    lda_cfg.k,
                    built.corpus.total_tokens()
                );
            }
            let model = topicmodel::train(&built.corpus, &built.vocabulary, lda_cfg)?;
            let assignments = topicmodel::assign_topics(&model, cfg.lda.cutoff)?;
            let (assigned, unassigned) = topicmodel::count_assigned(&assignments);
            model.save(&out.join("lda/model.json"))?;
            topicmodel::write_assignments(&out.join("lda/assignments.jsonl"), &assignments)?;
            topicmodel::write_top_words(&out.join("lda/topwords.json"), &model, cfg.lda.top_words)?;
            let c = counts([
                ("candidates", candidates),
                ("training_documents", built.corpus.len()),
                ("dropped_empty", built.dropped.len()),
                ("vocabulary", built.vocabulary.len()),
                ("tokens", built.corpus.total_tokens()),
                ("assigned", assigned),
                ("unassigned", unassigned),
            ]);
            crate::io::write_json(&out.join("lda/summary.json"), &c)?;
            Ok((
                c,
                vec![
                    "lda/model.json".into(),
                    "lda/assignments.jsonl".into(),
                    "lda/topwords.json".into(),
                    "lda/summary.json".into(),
                ],
            ))
        },
    )?;

    // analyze
    let inputs = vec![
        r.artifact_hash("classify", "classify/corpus.jsonl")?,
        r.artifact_hash("lda", "lda/assignments.jsonl")?,
        r.artifact_hash("lda", "lda/topwords.json")?,
        sha256_file(&cfg.analyze.survey).map_err(|e| Error::Stage { stage: "analyze", source: Box::new(e) })?,
        optional_file_hash(cfg.analyze.groups.as_ref())?,
        optional_file_hash(cfg.analyze.meta.as_ref())?,
    ];
    let p_method = match cfg.analyze.permutations {
        Some(permutations) => PValueMethod::Permutation { permutations, seed: cfg.seed },
        None => PValueMethod::TApprox,
    };
    r.run(
        StageSpec {
            name: "analyze",
            params: json!({
                "normalize": cfg.analyze.normalize,
                "permutations": cfg.analyze.permutations,
                "geocoded_only": cfg.lda.geocoded_only,
                "top_topics": cfg.report.top_topics,
            }),
            inputs,
            seed: cfg.analyze.permutations.map(|_| cfg.seed),
        },
        |out| analyze_stage(cfg, out, p_method),
    )?;

    // report
    let mut inputs = vec![
        r.artifact_hash("lda", "lda/topwords.json")?,
        r.artifact_hash("analyze", "analyze/survey_estimates.csv")?,
        r.artifact_hash("analyze", "analyze/state_distributions.csv")?,
        r.artifact_hash("analyze", "analyze/summary.json")?,
    ];
    inputs.push(optional_file_hash(cfg.report.geometry.as_ref())?);
    r.run(
        StageSpec {
            name: "report",
            params: json!({
                "topics": cfg.report.topics,
                "top_topics": cfg.report.top_topics,
                "wordcloud_words": cfg.report.wordcloud_words,
                "geometry": cfg.report.geometry.is_some(),
            }),
            inputs,
            seed: None,
        },
        |out| report_stage(cfg, out),
    )?;

    let manifest =
        Manifest { format: MANIFEST_FORMAT.into(), version: MANIFEST_VERSION, seed: cfg.seed, stages: r.records };
    crate::io::write_json(&manifest_path(out), &manifest)?;
    Ok(RunSummary { manifest, cache_hits: r.cache_hits })
}

/// The shipped (or given) stopword list plus extra words.
pub fn stopword_list(path: Option<&Path>, extra: &[String]) -> Result<Stopwords> {
    let mut stop = match path {
        Some(p) => Stopwords::load(p)?,
        None => Stopwords::builtin(),
    };
    stop.extend(extra);
    Ok(stop)
}

/// Indexes the non-empty messages (only geocoded ones when asked) for
/// training. Also returns how many messages were candidates.
pub fn training_set(
    corpus: &[CleanMessage],
    stop: &Stopwords,
    geocoded_only: bool,
) -> Result<(usize, topicmodel::BuiltVocabulary)> {
    let docs: Vec<&CleanMessage> =
        corpus.iter().filter(|m| !m.tokens.is_empty() && (!geocoded_only || m.state.is_some())).collect();
    let built = topicmodel::build_vocabulary(docs.iter().map(|m| (m.id.as_str(), m.tokens.as_slice())), stop)?;
    Ok((docs.len(), built))
}

/// Per-group state estimates.
pub fn all_estimates(
    respondents: &[survey::SurveyRespondent],
    groups: &QuestionGroups,
) -> BTreeMap<String, BTreeMap<StateCode, f64>> {
    groups.groups.iter().map(|g| (g.id.clone(), survey::state_estimates(respondents, g))).collect()
}

/// Inputs for the analysis stage, shared with the standalone commands.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub corpus: PathBuf,
    pub assignments: PathBuf,
    pub top_words: Vec<TopicWords>,
    pub meta: Option<PathBuf>,
    pub groups: Option<PathBuf>,
    /// Required for the geographic comparison only.
    pub survey: Option<PathBuf>,
    pub normalize: bool,
    pub geocoded_only: bool,
    pub p_method: PValueMethod,
    pub top_topics: usize,
}

/// Which research questions to answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Questions {
    pub shares: bool,
    pub volume: bool,
    pub geography: bool,
}

impl Questions {
    pub const ALL: Questions = Questions { shares: true, volume: true, geography: true };
}

/// Writes the requested analysis tables into `dir`; returns the row
/// counts and the file names written, relative to `dir`.
pub fn run_analysis(a: &Analysis, q: Questions, dir: &Path) -> Result<(Counts, Vec<String>)> {
    let corpus: Vec<CleanMessage> =
        ingest::read_corpus(&a.corpus)?.into_iter().filter(|m| !a.geocoded_only || m.state.is_some()).collect();
    let assignments = topicmodel::read_assignments(&a.assignments)?;
    let k = a.top_words.len();
    let meta = match &a.meta {
        Some(p) => TopicMetaTable::load(p)?,
        None => TopicMetaTable::default(),
    };
    let eligible = meta.included(k);
    let records = analytics::build_records(&corpus, &assignments, &meta);
    let n_consumer = records.iter().filter(|r| r.class == MessageClass::Consumer).count();
    let mut c = counts([
        ("records", records.len()),
        ("consumer", n_consumer),
        ("promotional", records.len() - n_consumer),
        ("eligible_topics", eligible.len()),
    ]);
    let mut files = Vec::new();
    let mut summary = serde_json::Map::new();

    if q.shares {
        let shares: BTreeMap<MessageClass, Vec<analytics::TopicShare>> = MessageClass::ALL
            .iter()
            .map(|&cl| {
                let mut s = analytics::topic_shares(&records, cl);
                s.retain(|x| !meta.is_excluded(x.topic));
                (cl, s)
            })
            .collect();
        analytics::write_topic_shares(&dir.join("rq1_topic_shares.csv"), &shares, &meta)?;
        files.push("rq1_topic_shares.csv".to_string());
        let consumer_top: Vec<usize> =
            shares[&MessageClass::Consumer].iter().take(a.top_topics).map(|s| s.topic).collect();
        summary.insert("top_consumer_topics".into(), json!(consumer_top));
    }

    if q.volume {
        let (rq2, undefined) = analytics::volume_correlations(&records, &eligible, &meta, a.normalize, a.p_method)?;
        analytics::write_volume_correlations(&dir.join("rq2_volume_correlations.csv"), &rq2)?;
        analytics::write_monthly_series(&dir.join("monthly_series.csv"), &records, &eligible, a.normalize)?;
        files.push("rq2_volume_correlations.csv".into());
        files.push("monthly_series.csv".into());
        c.insert("rq2_rows".into(), rq2.len() as u64);
        c.insert("rq2_significant".into(), rq2.iter().filter(|r| r.significant).count() as u64);
        c.insert("rq2_undefined".into(), undefined.len() as u64);
    }

    if q.geography {
        let survey_path =
            a.survey.as_ref().ok_or_else(|| Error::Config("the geographic comparison needs a survey file".into()))?;
        let groups = match &a.groups {
            Some(p) => QuestionGroups::load(p)?,
            None => QuestionGroups::builtin(),
        };
        let loaded = survey::load_respondents(survey_path)?;
        let estimates = all_estimates(&loaded.respondents, &groups);
        survey::write_estimates(&dir.join("survey_estimates.csv"), &estimates)?;
        let top_words: Vec<Vec<String>> = a
            .top_words
            .iter()
            .map(|t| t.words.iter().take(analytics::KEYWORD_TOP_N).map(|w| w.word.clone()).collect())
            .collect();
        let matches: Vec<_> =
            analytics::keyword_map(&top_words, &groups).into_iter().filter(|m| !meta.is_excluded(m.topic)).collect();
        analytics::write_keyword_map(&dir.join("keyword_map.csv"), &matches)?;
        let pairs = analytics::topic_group_pairs(&matches);
        let distributions: BTreeMap<usize, BTreeMap<StateCode, f64>> =
            eligible.iter().map(|&t| (t, analytics::state_distribution(&records, t))).collect();
        analytics::write_state_distributions(&dir.join("state_distributions.csv"), &distributions)?;
        let report = analytics::correlation_report(&analytics::ReportInputs {
            topics: &eligible,
            meta: &meta,
            groups: &groups,
            keyword_pairs: &pairs,
            distributions: &distributions,
            estimates: &estimates,
            p_method: a.p_method,
        });
        analytics::write_correlation_report(&dir.join("rq3_correlations.csv"), &report)?;
        files.extend(
            ["survey_estimates.csv", "keyword_map.csv", "state_distributions.csv", "rq3_correlations.csv"]
                .map(String::from),
        );
        for (k, v) in [
            ("respondents", loaded.respondents.len()),
            ("respondents_skipped", loaded.skipped),
            ("keyword_matches", matches.len()),
            ("keyword_pairs", pairs.len()),
            ("rq3_rows", report.rows.len()),
            ("rq3_significant_keyword", report.significant(Scope::Keyword).count()),
            ("rq3_significant_construct", report.significant(Scope::Construct).count()),
            ("rq3_skipped", report.skipped.len()),
        ] {
            c.insert(k.into(), v as u64);
        }
        summary.insert("skipped_pairs".into(), json!(report.skipped));
    }

    summary.insert("counts".into(), json!(c));
    crate::io::write_json(&dir.join("summary.json"), &summary)?;
    files.push("summary.json".into());
    Ok((c, files))
}

fn analyze_stage(cfg: &PipelineConfig, out: &Path, p_method: PValueMethod) -> Result<(Counts, Vec<String>)> {
    let a = Analysis {
        corpus: out.join("classify/corpus.jsonl"),
        assignments: out.join("lda/assignments.jsonl"),
        top_words: crate::io::read_json(&out.join("lda/topwords.json"))?,
        meta: cfg.analyze.meta.clone(),
        groups: cfg.analyze.groups.clone(),
        survey: Some(cfg.analyze.survey.clone()),
        normalize: cfg.analyze.normalize,
        geocoded_only: cfg.lda.geocoded_only,
        p_method,
        top_topics: cfg.report.top_topics,
    };
    let (c, files) = run_analysis(&a, Questions::ALL, &out.join("analyze"))?;
    Ok((c, files.into_iter().map(|f| format!("analyze/{f}")).collect()))
}

fn read_keyed_values(
    path: &Path,
    key_col: &str,
    value_col: &str,
) -> Result<BTreeMap<String, BTreeMap<StateCode, f64>>> {
    let mut rdr = crate::io::csv_reader(path)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = |n: &str| {
        headers
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::Input(format!("{}: missing column `{n}`", path.display())))
    };
    let (kc, sc, vc) = (col(key_col)?, col("state")?, col(value_col)?);
    let mut out: BTreeMap<String, BTreeMap<StateCode, f64>> = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let state: StateCode = row.get(sc).unwrap_or_default().parse()?;
        let v: f64 = row
            .get(vc)
            .unwrap_or_default()
            .parse()
            .map_err(|_| Error::Input(format!("{}: bad number", path.display())))?;
        out.entry(row.get(kc).unwrap_or_default().to_string()).or_default().insert(state, v);
    }
    Ok(out)
}

fn report_stage(cfg: &PipelineConfig, out: &Path) -> Result<(Counts, Vec<String>)> {
    let top: Vec<TopicWords> = crate::io::read_json(&out.join("lda/topwords.json"))?;
    let mut artifacts = vec!["report/wordcloud.csv".to_string()];
    report::write_wordcloud(&out.join("report/wordcloud.csv"), &top, Some(cfg.report.wordcloud_words))?;
    let mut maps = 0;
    let mut missing = 0;
    if let Some(geo) = &cfg.report.geometry {
        let shapes = StateShape::load(geo)?;
        let estimates = read_keyed_values(&out.join("analyze/survey_estimates.csv"), "qg", "estimate")?;
        let dists = read_keyed_values(&out.join("analyze/state_distributions.csv"), "topic", "value")?;
        let summary: Value = crate::io::read_json(&out.join("analyze/summary.json"))?;
        let topics: Vec<usize> = if cfg.report.topics.is_empty() {
            summary["top_consumer_topics"]
                .as_array()
                .map(|a| a.iter().filter_map(|v| v.as_u64().map(|t| t as usize)).collect())
                .unwrap_or_default()
        } else {
            cfg.report.topics.clone()
        };
        let mut render = |name: String, title: String, values: BTreeMap<StateCode, f64>| -> Result<()> {
            let rendered = report::render_choropleth(&Choropleth::new(title, values), &shapes);
            missing += rendered.missing_geometry.len();
            report::write_svg(&out.join(&name), &rendered)?;
            artifacts.push(name);
            maps += 1;
            Ok(())
        };
        for (qg, values) in estimates {
            render(format!("report/choropleth_{qg}.svg"), format!("{qg} survey estimate"), values)?;
        }
        for t in topics {
            match dists.get(&t.to_string()) {
                Some(values) => render(
                    format!("report/choropleth_topic_{t}.svg"),
                    format!("topic {t} share of consumer messages"),
                    values.clone(),
                )?,
                None => log::warn!("no state distribution for topic {t}; map skipped"),
            }
        }
    } else {
        log::warn!("report.geometry not set; choropleths skipped");
    }
    Ok((counts([("wordcloud_topics", top.len()), ("choropleths", maps), ("missing_geometry", missing)]), artifacts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_are_stable() {
        assert_eq!(sha256_bytes(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
