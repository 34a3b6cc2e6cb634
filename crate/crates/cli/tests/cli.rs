use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topicsurvey")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let o = cli(args, cwd);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn every_stage_from_the_command_line() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("spec.toml"), "seed = 3\nk = 4\nv = 150\nd = 1200\n").unwrap();
    ok(&["synth", "corpus", "--spec", "spec.toml", "--out", "syn"], d);
    assert!(d.join("syn/truth.json").is_file());

    let report =
        ok(&["ingest", "--input", "syn/records/*.jsonl", "--out", "clean.jsonl", "--report", "ingest.json"], d);
    assert!(report.contains("\"duplicates\""));
    ok(
        &[
            "geocode",
            "--corpus",
            "clean.jsonl",
            "--gazetteer",
            "syn/gazetteer.tsv",
            "--out",
            "geo.jsonl",
            "--stats",
            "geo.json",
        ],
        d,
    );
    let out = ok(&["classify", "--corpus", "geo.jsonl", "--out", "cls.jsonl"], d);
    assert!(out.starts_with("promotional"));

    ok(
        &[
            "lda",
            "train",
            "--corpus",
            "cls.jsonl",
            "--k",
            "4",
            "--alpha",
            "0.1",
            "--iterations",
            "50",
            "--extra-stopwords",
            "hpv",
            "--out",
            "model.json",
        ],
        d,
    );
    let out = ok(&["lda", "assign", "--model", "model.json", "--out", "assign.jsonl"], d);
    assert!(out.starts_with("assigned"));
    ok(&["lda", "topwords", "--model", "model.json", "--n", "10", "--out", "top.json"], d);
    ok(&["lda", "select-k", "--corpus", "cls.jsonl", "--candidates", "2,4", "--iterations", "20", "--out", "k.csv"], d);
    assert_eq!(std::fs::read_to_string(d.join("k.csv")).unwrap().lines().count(), 3);

    ok(
        &[
            "lda",
            "calibrate",
            "sample",
            "--model",
            "model.json",
            "--corpus",
            "cls.jsonl",
            "--n",
            "5",
            "--out",
            "sheet.csv",
        ],
        d,
    );
    let sheet = std::fs::read_to_string(d.join("sheet.csv")).unwrap();
    assert_eq!(sheet.lines().count(), 16);

    let plant = ok(&["synth", "survey", "--truth", "syn/truth.json", "--target-rho", "0.9", "--out", "survey.csv"], d);
    assert!(plant.contains("achieved_rho"));
    ok(&["survey", "estimates", "--respondents", "survey.csv", "--out", "est.csv"], d);

    let common =
        ["--corpus", "cls.jsonl", "--model", "model.json", "--assignments", "assign.jsonl", "--survey", "survey.csv"];
    for (rq, file) in
        [("rq1", "rq1_topic_shares.csv"), ("rq2", "rq2_volume_correlations.csv"), ("rq3", "rq3_correlations.csv")]
    {
        let mut args = vec!["analyze", rq];
        args.extend(common);
        args.extend(["--out", "analysis"]);
        ok(&args, d);
        assert!(d.join("analysis").join(file).is_file(), "{file}");
    }

    ok(&["report", "wordcloud", "--topwords", "top.json", "--out", "cloud.csv"], d);
    ok(
        &[
            "report",
            "choropleth",
            "--values",
            "est.csv",
            "--column",
            "estimate",
            "--filter",
            "qg=QG1",
            "--geometry",
            "syn/states.geojson",
            "--title",
            "QG1",
            "--out",
            "qg1.svg",
        ],
        d,
    );
    assert!(std::fs::read_to_string(d.join("qg1.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn pipeline_errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("bad.toml"), "[ingest]\ninputs = [\"x\"]\n[geocode]\n[analyze]\nsurvey = \"s.csv\"\n")
        .unwrap();
    let o = cli(&["pipeline", "run", "--config", "bad.toml", "--out", "o"], d);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing required key `gazetteer`"));

    std::fs::write(
        d.join("nofiles.toml"),
        "[ingest]\ninputs = [\"none/*.jsonl\"]\n[geocode]\ngazetteer = \"g.tsv\"\n[analyze]\nsurvey = \"s.csv\"\n",
    )
    .unwrap();
    let o = cli(&["pipeline", "run", "--config", "nofiles.toml", "--out", "o"], d);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage `ingest` failed"));
}
