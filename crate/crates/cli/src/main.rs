use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use topicsurvey::analytics::PValueMethod;
use topicsurvey::classify::{self, AnnotationSet, MessageClass};
use topicsurvey::geocode::{Gazetteer, Geocoder, DEFAULT_RADIUS_KM};
use topicsurvey::ingest::{self, KeywordSet, LanguageDetector};
use topicsurvey::pipeline::{self, Analysis, Overrides, PipelineConfig, Questions};
use topicsurvey::report::{self, Choropleth, StateShape};
use topicsurvey::survey::{self, QuestionGroups};
use topicsurvey::synth::{self, GroundTruth, PlantSpec, SynthSpec};
use topicsurvey::topicmodel::{self, LdaConfig, LdaModel, TopicWords};
use topicsurvey::{io, Result};

#[derive(Parser)]
#[command(name = "topicsurvey", version, about = "Topic models of social-media messages compared against survey data")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge, deduplicate, filter and clean raw record files.
    Ingest(IngestArgs),
    /// Resolve each message to a US state.
    Geocode(GeocodeArgs),
    /// Label messages promotional or consumer.
    Classify(ClassifyArgs),
    /// Train and inspect topic models.
    #[command(subcommand)]
    Lda(LdaCmd),
    /// Survey-side computations.
    #[command(subcommand)]
    Survey(SurveyCmd),
    /// Answer the three research questions.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Synthetic corpora and surveys with known ground truth.
    #[command(subcommand)]
    Synth(SynthCmd),
    /// Figures.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Run every stage from one config file.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
}

#[derive(Args)]
struct IngestArgs {
    /// Record file or glob; repeatable. Gzip files are read transparently.
    #[arg(long, required = true)]
    input: Vec<String>,
    /// Keyword pattern file; the shipped list when omitted.
    #[arg(long)]
    keywords: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Per-step counts as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GeocodeArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Tab-separated `name state latitude longitude population`; the shipped
    /// gazetteer when omitted.
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RADIUS_KM)]
    radius_km: f64,
    #[arg(long)]
    out: PathBuf,
    /// Per-tier counts as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct ClassifyArgs {
    #[command(subcommand)]
    eval: Option<ClassifyCmd>,
    #[arg(long, required = true)]
    corpus: Option<PathBuf>,
    #[arg(long, required = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ClassifyCmd {
    /// Compare predictions against `id,label` annotations.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        /// Corpus to classify (already-classified messages are reused).
        #[arg(long)]
        corpus: PathBuf,
        /// Write the full evaluation as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct LdaParams {
    #[arg(long, default_value_t = 150)]
    k: usize,
    /// Document-topic prior; 50/K when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl LdaParams {
    fn config(&self) -> LdaConfig {
        LdaConfig { k: self.k, alpha: self.alpha, beta: self.beta, iterations: self.iterations, seed: self.seed }
    }
}

#[derive(Args, Clone)]
struct TrainingData {
    /// Cleaned (and geocoded) corpus.
    #[arg(long)]
    corpus: PathBuf,
    /// Stopword file; the shipped English list when omitted.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Extra stopwords, comma-separated.
    #[arg(long, value_delimiter = ',')]
    extra_stopwords: Vec<String>,
    /// Train on every message, not only those resolved to a state.
    #[arg(long)]
    all_messages: bool,
}

impl TrainingData {
    fn build(&self) -> Result<topicmodel::BuiltVocabulary> {
        let corpus = ingest::read_corpus(&self.corpus)?;
        let stop = pipeline::stopword_list(self.stopwords.as_deref(), &self.extra_stopwords)?;
        let (_, built) = pipeline::training_set(&corpus, &stop, !self.all_messages)?;
        log::info!(
            "{} documents, {} words, {} tokens",
            built.corpus.len(),
            built.vocabulary.len(),
            built.corpus.total_tokens()
        );
        Ok(built)
    }
}

#[derive(Subcommand)]
enum LdaCmd {
    /// Fit a model by collapsed Gibbs sampling.
    Train {
        #[command(flatten)]
        data: TrainingData,
        #[command(flatten)]
        params: LdaParams,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one model per candidate K and report selection metrics.
    SelectK {
        #[command(flatten)]
        data: TrainingData,
        #[command(flatten)]
        params: LdaParams,
        /// Candidate topic counts, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        candidates: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assign topics to documents above a probability cutoff.
    Assign {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = topicmodel::DEFAULT_CUTOFF)]
        cutoff: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the most probable words per topic.
    Topwords {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cutoff calibration: sample a review sheet or score a reviewed one.
    #[command(subcommand)]
    Calibrate(CalibrateCmd),
}

#[derive(Subcommand)]
enum CalibrateCmd {
    Sample {
        #[arg(long)]
        model: PathBuf,
        /// Corpus holding the message texts.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.10,0.15,0.20")]
        cutoffs: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        words: usize,
        #[arg(long)]
        out: PathBuf,
    },
    Score {
        #[arg(long)]
        sheet: PathBuf,
        #[arg(long, default_value_t = topicmodel::DEFAULT_ADEQUACY_THRESHOLD)]
        threshold: f64,
    },
}

#[derive(Subcommand)]
enum SurveyCmd {
    /// Weighted per-state proportion of interested answers for each group.
    Estimates {
        #[arg(long)]
        respondents: PathBuf,
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Classified corpus.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    assignments: PathBuf,
    /// Topic annotations CSV.
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    survey: Option<PathBuf>,
    #[arg(long)]
    groups: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Correlate monthly shares rather than counts.
    #[arg(long)]
    normalize: bool,
    /// Permutation test with this many permutations instead of the t approximation.
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Include messages not resolved to a state.
    #[arg(long)]
    all_messages: bool,
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Topic shares by message class.
    Rq1(AnalyzeArgs),
    /// Monthly volume correlation between classes per topic.
    Rq2(AnalyzeArgs),
    /// State-level correlation between topics and survey groups.
    Rq3(AnalyzeArgs),
}

#[derive(Subcommand)]
enum SynthCmd {
    /// Generate records plus ground truth from a TOML spec.
    Corpus {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plant a state-level survey signal correlated with a topic.
    Survey {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        target_rho: f64,
        #[arg(long, default_value = "QG1")]
        qg: String,
        #[arg(long, default_value_t = 0)]
        topic: usize,
        #[arg(long, default_value_t = 0.01)]
        noise_sigma: f64,
        #[arg(long, default_value_t = 400)]
        respondents_per_state: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Shade states by value.
    Choropleth {
        /// CSV with a `state` column and a value column.
        #[arg(long)]
        values: PathBuf,
        #[arg(long, default_value = "value")]
        column: String,
        /// Keep only rows where COLUMN=VALUE, e.g. `qg=QG1`.
        #[arg(long, value_name = "COLUMN=VALUE")]
        filter: Option<String>,
        /// GeoJSON state boundaries.
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long, default_value = "")]
        title: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Word sizes proportional to probability.
    Wordcloud {
        /// Top-words JSON from `lda topwords`.
        #[arg(long)]
        topwords: PathBuf,
        #[arg(long, default_value_t = 10)]
        words: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker cap; 0 uses every core.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override a config value, e.g. `--set lda.k=40`. Repeatable.
        #[arg(long, value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => {
            let mut files = Vec::new();
            for pattern in &a.input {
                files.extend(ingest::expand_inputs(pattern)?);
            }
            files.sort();
            files.dedup();
            let keywords = match &a.keywords {
                Some(p) => KeywordSet::load(p)?,
                None => KeywordSet::builtin(),
            };
            let (corpus, report) = ingest::ingest_files(&files, &keywords, LanguageDetector::builtin())?;
            ingest::write_corpus(&a.out, &corpus)?;
            if let Some(p) = &a.report {
                io::write_json(p, &report)?;
            }
            print_json(&report);
        }
        Command::Geocode(a) => {
            let mut corpus = ingest::read_corpus(&a.corpus)?;
            let gaz = match &a.gazetteer {
                Some(p) => Gazetteer::load(p)?,
                None => Gazetteer::builtin(),
            };
            let stats = Geocoder::new(gaz).with_radius_km(a.radius_km).geocode_corpus(&mut corpus);
            ingest::write_corpus(&a.out, &corpus)?;
            if let Some(p) = &a.stats {
                io::write_json(p, &stats)?;
            }
            print_json(&stats);
        }
        Command::Classify(a) => match a.eval {
            Some(ClassifyCmd::Eval { gold, corpus, out }) => {
                let mut corpus = ingest::read_corpus(&corpus)?;
                classify::classify_corpus(&mut corpus);
                let preds: HashMap<String, MessageClass> =
                    corpus.iter().filter_map(|m| Some((m.id.clone(), m.class?))).collect();
                let eval = classify::evaluate(&preds, &AnnotationSet::load(&gold)?)?;
                for (class, m) in &eval.per_class {
                    let (p, r, f) = m.as_percentages();
                    println!("{:<12} P={p:.2}% R={r:.2}% F={f:.2}%", class.as_str());
                }
                let (p, r, f) = eval.macro_avg.as_percentages();
                println!("{:<12} P={p:.2}% R={r:.2}% F={f:.2}% (n={})", "macro", eval.n);
                if let Some(o) = out {
                    io::write_json(&o, &eval)?;
                }
            }
            None => {
                let (corpus_path, out) = (a.corpus.expect("required"), a.out.expect("required"));
                let mut corpus = ingest::read_corpus(&corpus_path)?;
                classify::classify_corpus(&mut corpus);
                ingest::write_corpus(&out, &corpus)?;
                let promo = corpus.iter().filter(|m| m.class == Some(MessageClass::Promotional)).count();
                println!("promotional {promo}, consumer {}", corpus.len() - promo);
            }
        },
        Command::Lda(cmd) => lda(cmd)?,
        Command::Survey(SurveyCmd::Estimates { respondents, groups, out }) => {
            let loaded = survey::load_respondents(&respondents)?;
            if loaded.skipped > 0 {
                log::warn!("skipped {} respondents without a usable state or weight", loaded.skipped);
            }
            let groups = load_groups(groups.as_deref())?;
            survey::write_estimates(&out, &pipeline::all_estimates(&loaded.respondents, &groups))?;
        }
        Command::Analyze(cmd) => {
            let (a, q) = match cmd {
                AnalyzeCmd::Rq1(a) => (a, Questions { shares: true, volume: false, geography: false }),
                AnalyzeCmd::Rq2(a) => (a, Questions { shares: false, volume: true, geography: false }),
                AnalyzeCmd::Rq3(a) => (a, Questions { shares: false, volume: false, geography: true }),
            };
            let model = LdaModel::load(&a.model)?;
            let analysis = Analysis {
                corpus: a.corpus,
                assignments: a.assignments,
                top_words: topicmodel::top_words_table(&model, topicsurvey::analytics::KEYWORD_TOP_N),
                meta: a.meta,
                groups: a.groups,
                survey: a.survey,
                normalize: a.normalize,
                geocoded_only: !a.all_messages,
                p_method: match a.permutations {
                    Some(permutations) => PValueMethod::Permutation { permutations, seed: a.seed },
                    None => PValueMethod::TApprox,
                },
                top_topics: 3,
            };
            let (counts, files) = pipeline::run_analysis(&analysis, q, &a.out)?;
            print_json(&counts);
            for f in files {
                println!("{}", a.out.join(f).display());
            }
        }
        Command::Synth(SynthCmd::Corpus { spec, out }) => {
            let spec = match spec {
                Some(p) => SynthSpec::load(&p)?,
                None => SynthSpec::default(),
            };
            let corpus = synth::generate_corpus(&spec, &Gazetteer::builtin())?;
            synth::write_corpus(&out, &corpus, topicsurvey::geocode::BUILTIN_PLACES)?;
            println!("{} messages written under {}", corpus.truth.messages.len(), out.display());
        }
        Command::Synth(SynthCmd::Survey {
            truth,
            target_rho,
            qg,
            topic,
            noise_sigma,
            respondents_per_state,
            seed,
            groups,
            out,
        }) => {
            let truth = GroundTruth::load(&truth)?;
            let groups = load_groups(groups.as_deref())?;
            let plant = PlantSpec { qg, topic, target_rho, noise_sigma, respondents_per_state, seed };
            let (respondents, report) = synth::plant_geo_correlation(&truth, &groups, &plant)?;
            let questions: Vec<String> =
                groups.groups.iter().flat_map(|g| g.questions.iter().map(|q| q.id.clone())).collect();
            survey::write_respondents(&out, &respondents, &questions)?;
            print_json(&report);
        }
        Command::Report(ReportCmd::Choropleth { values, column, filter, geometry, title, out }) => {
            let filter = match &filter {
                Some(f) => Some(
                    f.split_once('=')
                        .ok_or_else(|| topicsurvey::Error::Config(format!("--filter `{f}` is not COLUMN=VALUE")))?,
                ),
                None => None,
            };
            let values = report::read_column(&values, &column, filter)?;
            let shapes = StateShape::load(&geometry)?;
            let rendered = report::render_choropleth(&Choropleth::new(title, values), &shapes);
            report::write_svg(&out, &rendered)?;
        }
        Command::Report(ReportCmd::Wordcloud { topwords, words, out }) => {
            let top: Vec<TopicWords> = io::read_json(&topwords)?;
            report::write_wordcloud(&out, &top, Some(words))?;
        }
        Command::Pipeline(PipelineCmd::Run { config, out, threads, seed, set }) => {
            let cfg = PipelineConfig::load(&config, &Overrides { seed, threads, set })?;
            let summary = pipeline::run_pipeline(&cfg, &out)?;
            for s in &summary.manifest.stages {
                let hit = summary.cache_hits.contains(&s.name.as_str());
                println!("{:<9} {}", s.name, if hit { "cached" } else { "ran" });
            }
        }
    }
    Ok(())
}

fn lda(cmd: LdaCmd) -> Result<()> {
    match cmd {
        LdaCmd::Train { data, params, out } => {
            let cfg = params.config();
            cfg.validate()?;
            let built = data.build()?;
            topicmodel::train(&built.corpus, &built.vocabulary, cfg)?.save(&out)?;
        }
        LdaCmd::SelectK { data, params, candidates, out } => {
            let built = data.build()?;
            let rows = topicmodel::select_k(&built.corpus, &built.vocabulary, &candidates, params.config())?;
            topicmodel::write_k_selection(&out, &rows)?;
        }
        LdaCmd::Assign { model, cutoff, out } => {
            let assignments = topicmodel::assign_topics(&LdaModel::load(&model)?, cutoff)?;
            let (assigned, unassigned) = topicmodel::count_assigned(&assignments);
            topicmodel::write_assignments(&out, &assignments)?;
            println!("assigned {assigned}, unassigned {unassigned}");
        }
        LdaCmd::Topwords { model, n, out } => {
            topicmodel::write_top_words(&out, &LdaModel::load(&model)?, n)?;
        }
        LdaCmd::Calibrate(CalibrateCmd::Sample { model, corpus, cutoffs, n, seed, words, out }) => {
            let texts: HashMap<String, String> =
                ingest::read_corpus(&corpus)?.into_iter().map(|m| (m.id, m.text)).collect();
            let rows = topicmodel::calibration_sample(&LdaModel::load(&model)?, &texts, &cutoffs, n, seed, words)?;
            topicmodel::write_review_sheet(&out, &rows)?;
        }
        LdaCmd::Calibrate(CalibrateCmd::Score { sheet, threshold }) => {
            let score = topicmodel::calibration_score(&topicmodel::read_review_sheet(&sheet)?, threshold)?;
            for (c, a) in &score.adequacy {
                println!("cutoff {c:.2}: {:.1}% adequate", a * 100.0);
            }
            match score.selected {
                Some(c) => println!("selected cutoff {c:.2}"),
                None => println!("no cutoff exceeds {:.0}%", threshold * 100.0),
            }
        }
    }
    Ok(())
}

fn load_groups(path: Option<&Path>) -> Result<QuestionGroups> {
    match path {
        Some(p) => QuestionGroups::load(p),
        None => Ok(QuestionGroups::builtin()),
    }
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}
