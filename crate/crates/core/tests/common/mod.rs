#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use topicsurvey::geocode::{Gazetteer, BUILTIN_PLACES};
use topicsurvey::survey::{self, QuestionGroups};
use topicsurvey::synth::{self, GroundTruth, PlantReport, PlantSpec, SynthSpec};

/// Writes a synthetic corpus, a planted survey and a pipeline config into
/// `dir`. Returns the truth, the plant report and the config path.
pub fn synth_workspace(
    dir: &Path,
    spec: &SynthSpec,
    plant: &PlantSpec,
    lda: &str,
) -> (GroundTruth, PlantReport, PathBuf) {
    let corpus = synth::generate_corpus(spec, &Gazetteer::builtin()).unwrap();
    synth::write_corpus(dir, &corpus, BUILTIN_PLACES).unwrap();
    let report = write_survey(dir, &corpus.truth, plant);
    let config = dir.join("pipeline.toml");
    std::fs::write(
        &config,
        format!(
            r#"seed = {seed}

[ingest]
inputs = ["records/*.jsonl"]

[geocode]
gazetteer = "gazetteer.tsv"

[lda]
extra_stopwords = ["{marker}"]
{lda}

[analyze]
survey = "survey.csv"

[report]
geometry = "states.geojson"
"#,
            seed = spec.seed,
            marker = spec.marker,
        ),
    )
    .unwrap();
    (corpus.truth, report, config)
}

/// Plants a survey signal and writes it to `dir/survey.csv`.
pub fn write_survey(dir: &Path, truth: &GroundTruth, plant: &PlantSpec) -> PlantReport {
    let groups = QuestionGroups::builtin();
    let (respondents, report) = synth::plant_geo_correlation(truth, &groups, plant).unwrap();
    let questions: Vec<String> = groups.groups.iter().flat_map(|g| g.questions.iter().map(|q| q.id.clone())).collect();
    survey::write_respondents(&dir.join("survey.csv"), &respondents, &questions).unwrap();
    report
}

/// Every file under `root`, keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn fixture_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

/// Runs the hand-labeled geocoder cases; returns (cases, disagreements).
pub fn geocode_fixture() -> (usize, Vec<String>) {
    use topicsurvey::geocode::Geocoder;
    use topicsurvey::StateCode;
    let geocoder = Geocoder::new(Gazetteer::load(&fixture_path("gazetteer.tsv")).unwrap());
    let mut rdr = csv::Reader::from_path(fixture_path("geocode_cases.csv")).unwrap();
    let mut n = 0;
    let mut wrong = Vec::new();
    for row in rdr.records() {
        let row = row.unwrap();
        let (kind, input, expected) = (&row[0], &row[1], &row[2]);
        let expected = (!expected.is_empty()).then(|| StateCode::from_abbrev(expected).unwrap());
        let got = if kind == "coordinates" {
            let mut it = input.split(' ').map(|v| v.parse::<f64>().unwrap());
            geocoder.reverse_geocode(it.next().unwrap(), it.next().unwrap())
        } else {
            geocoder.text_resolve(input)
        };
        if got != expected {
            wrong.push(format!("{kind} {input:?}: got {got:?}, want {expected:?}"));
        }
        n += 1;
    }
    (n, wrong)
}

fn brute_force(
    places: &[topicsurvey::geocode::Place],
    lat: f64,
    lon: f64,
    radius: f64,
) -> Option<&topicsurvey::geocode::Place> {
    use topicsurvey::geocode::haversine_km;
    let mut best: Option<(f64, usize)> = None;
    for (i, p) in places.iter().enumerate() {
        let d = haversine_km(lat, lon, p.latitude, p.longitude);
        if d > radius {
            continue;
        }
        let better = match best {
            None => true,
            Some((bd, bi)) => {
                d < bd
                    || (d == bd
                        && (p.population > places[bi].population || (p.population == places[bi].population && i < bi)))
            }
        };
        if better {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| &places[i])
}

/// Compares the grid index against a linear scan on `n` seeded random
/// points (half over North America, half anywhere). Returns
/// (mismatches, resolved points).
pub fn grid_vs_brute(gaz: &Gazetteer, n: usize, seed: u64) -> (Vec<String>, usize) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    let mut hits = 0;
    for i in 0..n {
        let (lat, lon) = if i % 2 == 0 {
            (rng.random_range(15.0..72.0), rng.random_range(-170.0..-60.0))
        } else {
            (rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0))
        };
        let radius = [25.0, 100.0, 400.0, 3000.0][i % 4];
        let fast = gaz.nearest(lat, lon, radius);
        if fast != brute_force(gaz.places(), lat, lon, radius) {
            bad.push(format!("({lat}, {lon}) r={radius}"));
        }
        hits += fast.is_some() as usize;
    }
    (bad, hits)
}
