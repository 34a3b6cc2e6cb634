//! Detector accuracy on a labeled fixture of short sentences, kept apart
//! from the profile training samples.

use topicsurvey::ingest::langdetect::DEFAULT_MAX_DISTANCE;
use topicsurvey::ingest::LanguageDetector;

const LANGS: [&str; 5] = ["en", "es", "fr", "pt", "de"];

fn fixture(lang: &str) -> Vec<String> {
    let path = format!("{}/tests/fixtures/lang/{lang}.txt", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.trim().is_empty()).map(String::from).collect()
}

#[test]
fn fixture_has_enough_sentences() {
    for lang in LANGS {
        assert!(fixture(lang).len() >= 200, "{lang}");
    }
}

#[test]
fn language_accuracy() {
    let det = LanguageDetector::builtin();
    for lang in LANGS {
        let sents = fixture(lang);
        let correct = sents.iter().filter(|s| det.detect(s).lang.as_deref() == Some(lang)).count();
        let acc = correct as f64 / sents.len() as f64;
        println!("{lang}: {correct}/{} = {acc:.3}", sents.len());
        assert!(acc >= 0.95, "{lang} accuracy {acc}");
    }
}

/// English kept vs everything else routed away; this is the only split the
/// ingest filter uses.
#[test]
fn english_split() {
    let det = LanguageDetector::builtin();
    let en = fixture("en");
    let kept = en.iter().filter(|s| det.detect(s).lang.as_deref() == Some("en")).count();
    let others: Vec<String> = LANGS[1..].iter().flat_map(|l| fixture(l)).collect();
    let leaked = others.iter().filter(|s| det.detect(s).lang.as_deref() == Some("en")).count();
    assert!(kept as f64 / en.len() as f64 >= 0.98, "kept {kept}/{}", en.len());
    assert!(leaked as f64 / others.len() as f64 <= 0.01, "leaked {leaked}/{}", others.len());
}

/// Distance distribution behind the shipped threshold: every fixture
/// sentence's best distance sits below it.
#[test]
fn threshold_sweep() {
    let det = LanguageDetector::builtin();
    let mut dists: Vec<f64> = LANGS.iter().flat_map(|l| fixture(l)).map(|s| det.detect(&s).distance).collect();
    dists.sort_by(f64::total_cmp);
    let q = |p: f64| dists[((dists.len() - 1) as f64 * p) as usize];
    println!("best-distance quantiles: 50% {:.3} 90% {:.3} 99% {:.3} max {:.3}", q(0.5), q(0.9), q(0.99), q(1.0));
    for t in [0.80, 0.85, 0.88, 0.90, 0.92, 0.95] {
        let unknown = dists.iter().filter(|&&d| d > t).count();
        println!("threshold {t:.2}: {unknown} of {} fixture sentences unknown", dists.len());
    }
    let gibberish = ["xq zzv kkpt wrrl", "1234 5678 !!!", "qwxz jjkv bbq"];
    for g in gibberish {
        println!("{g:?}: {:.3}", det.detect(g).distance);
    }
    assert!(q(1.0) <= DEFAULT_MAX_DISTANCE);
}
