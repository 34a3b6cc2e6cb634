use std::collections::HashMap;

use topicsurvey::classify::{classify, MessageClass};
use topicsurvey::geocode::{Gazetteer, BUILTIN_PLACES};
use topicsurvey::ingest::{self, CleanMessage, KeywordSet, LanguageDetector};
use topicsurvey::pipeline;
use topicsurvey::survey::QuestionGroups;
use topicsurvey::synth::{self, GroundTruth, PlantSpec, SynthSpec};
use topicsurvey::topicmodel::{self, LdaConfig};

fn ingest_synth(spec: &SynthSpec) -> (GroundTruth, Vec<CleanMessage>, ingest::IngestReport) {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth::generate_corpus(spec, &Gazetteer::builtin()).unwrap();
    synth::write_corpus(tmp.path(), &corpus, BUILTIN_PLACES).unwrap();
    let files = ingest::expand_inputs(&format!("{}/records/*.jsonl", tmp.path().display())).unwrap();
    let (clean, report) = ingest::ingest_files(&files, &KeywordSet::builtin(), LanguageDetector::builtin()).unwrap();
    (corpus.truth, clean, report)
}

#[test]
fn round_trip_and_class_mix_at_full_scale() {
    let spec = SynthSpec::default();
    assert_eq!(spec.d, 10_000);
    let (truth, clean, report) = ingest_synth(&spec);
    assert_eq!(report.malformed, 0);
    assert_eq!(clean.len(), truth.messages.len());

    let want: HashMap<&str, MessageClass> = truth.messages.iter().map(|m| (m.id.as_str(), m.class)).collect();
    for m in &clean {
        assert_eq!(classify(m), want[m.id.as_str()], "{}", m.id);
    }
    let promo = clean.iter().filter(|m| classify(m) == MessageClass::Promotional).count() as f64 / clean.len() as f64;
    assert!((promo - spec.promotional_share).abs() <= 0.02, "promotional share {promo}");
}

#[test]
fn single_topic_is_recovered() {
    let spec = SynthSpec { k: 1, seed: 7, ..SynthSpec::default() };
    let (truth, clean, _) = ingest_synth(&spec);
    let stop = pipeline::stopword_list(None, std::slice::from_ref(&spec.marker)).unwrap();
    let (_, built) = pipeline::training_set(&clean, &stop, false).unwrap();
    let cfg = LdaConfig { k: 1, alpha: None, beta: 0.01, iterations: 50, seed: 1 };
    let model = topicmodel::train(&built.corpus, &built.vocabulary, cfg).unwrap();
    let learned = synth::project_phi(&model, &truth.words);
    let l1: f64 = learned[0].iter().zip(&truth.phi[0]).map(|(a, b)| (a - b).abs()).sum();
    assert!(l1 <= 0.05, "L1 = {l1}");
}

fn plant_truth() -> GroundTruth {
    synth::generate_corpus(&SynthSpec { seed: 3, ..SynthSpec::default() }, &Gazetteer::builtin()).unwrap().truth
}

#[test]
fn null_plant_stays_small() {
    let truth = plant_truth();
    let groups = QuestionGroups::builtin();
    let mut small = 0;
    for seed in 0..1000 {
        let plant = PlantSpec { target_rho: 0.0, seed, respondents_per_state: 50, ..PlantSpec::default() };
        let (_, rep) = synth::plant_geo_correlation(&truth, &groups, &plant).unwrap();
        assert_eq!(rep.n_states, 51);
        small += (rep.achieved_rho.abs() < 0.4) as usize;
    }
    assert!(small >= 950, "{small}/1000 below 0.4");
}

#[test]
fn strong_plants_land_in_range() {
    let truth = plant_truth();
    let groups = QuestionGroups::builtin();
    for (target, range) in [(0.9, 0.8..=1.0), (-0.9, -1.0..=-0.8)] {
        let plant = PlantSpec { target_rho: target, seed: 17, ..PlantSpec::default() };
        let (_, rep) = synth::plant_geo_correlation(&truth, &groups, &plant).unwrap();
        assert!(range.contains(&rep.achieved_rho), "target {target}: {rep:?}");
    }
}
