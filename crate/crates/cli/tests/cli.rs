//! End-to-end checks of the `novelty` binary: exit-code contract, manifest
//! emission, all-or-nothing output writing, and reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_novelty"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    for sub in ["ingest", "index", "score", "regress", "study", "synth", "stats"] {
        let out = run(&[sub, "--help"]);
        assert_eq!(code(&out), 0, "{sub} --help");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&[])), 1, "missing subcommand");
    assert_eq!(code(&run(&["score"])), 1, "missing required args");
    assert_eq!(code(&run(&["frobnicate"])), 1, "unknown subcommand");
    let out = run(&[
        "score",
        "--corpus", "x.jsonl",
        "--years", "2015:2009", // reversed
        "--out", "y.csv",
    ]);
    assert_eq!(code(&out), 1, "reversed year span");
}

#[test]
fn data_errors_exit_two_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("scores.csv");

    // nonexistent corpus
    let out = run(&[
        "score",
        "--corpus", &path_str(&dir.path().join("missing.jsonl")),
        "--years", "2009:2012",
        "--out", &path_str(&out_csv),
    ]);
    assert_eq!(code(&out), 2);
    assert!(!out_csv.exists(), "failed run must not leave outputs");

    // malformed JSONL
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"paper_id\": \"p1\", \"year\": }\n").unwrap();
    let out = run(&[
        "score",
        "--corpus", &path_str(&bad),
        "--years", "2009:2012",
        "--out", &path_str(&out_csv),
    ]);
    assert_eq!(code(&out), 2);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 1"), "error should cite the line: {msg}");
    assert!(!out_csv.exists());
}

#[test]
fn score_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("scores.csv");
    let out = run(&[
        "score",
        "--corpus", &path_str(&fixtures().join("corpus.jsonl")),
        "--years", "2009:2012",
        "--out", &path_str(&out_csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&out_csv).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("paper_id,year,"), "header: {header}");
    assert!(csv.lines().count() > 100);

    let manifest_path = dir.path().join("scores.csv.manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert!(manifest["tool_version"].is_string());
    assert!(manifest["corpus_digest"].is_string());
    assert!(manifest["config_digest"].is_string());
    assert!(manifest["row_counts"].is_object());
}

#[test]
fn regress_recovers_planted_effect() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("model.csv");
    let out = run(&[
        "regress",
        "--corpus", &path_str(&fixtures().join("corpus.jsonl")),
        "--tags", &path_str(&fixtures().join("tags.jsonl")),
        "--years", "2009:2012",
        "--family", "poisson",
        "--outcome", "new_finding",
        "--predictor", "u",
        "--out", &path_str(&out_csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&out_csv).unwrap();
    let row: Vec<&str> = csv
        .lines()
        .find(|l| l.starts_with("poisson,u,new_finding,u,"))
        .expect("u term present")
        .split(',')
        .collect();
    let coef: f64 = row[4].parse().unwrap();
    let se: f64 = row[5].parse().unwrap();
    // the bundled tag table was generated with a +0.8 log-linear effect of U
    assert!(
        (coef - 0.8).abs() <= 3.0 * se,
        "coef {coef} not within 3 SEs ({se}) of 0.8"
    );
}

#[test]
fn nonconvergence_exits_three() {
    // Two reference-pair blocks give exactly two distinct U values; tagging
    // only the papers in the rare block separates the logistic fit perfectly.
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("sep.jsonl");
    let tags_path = dir.path().join("sep_tags.jsonl");
    let mut corpus = String::new();
    let mut tags = String::new();
    for i in 0..32 {
        let (j1, j2, tagged) = if i < 28 {
            ("JA", "JB", 0)
        } else {
            ("JC", "JD", 1)
        };
        corpus.push_str(&format!(
            concat!(
                "{{\"paper_id\":\"p{i:02}\",\"year\":2013,\"doc_type\":\"article\",",
                "\"journal\":\"JX\",\"subject_categories\":[\"c\"],\"keywords\":[\"k{i}\"],",
                "\"references\":[{{\"journal\":\"{j1}\",\"year\":2010}},",
                "{{\"journal\":\"{j2}\",\"year\":2011}}]}}\n"
            ),
            i = i,
            j1 = j1,
            j2 = j2,
        ));
        tags.push_str(&format!(
            "{{\"paper_id\":\"p{i:02}\",\"tags\":{{\"new_finding\":{tagged}}},\"fm_score_sum\":1,\"citations\":1}}\n"
        ));
    }
    fs::write(&corpus_path, corpus).unwrap();
    fs::write(&tags_path, tags).unwrap();

    let out_csv = dir.path().join("model.csv");
    let out = run(&[
        "regress",
        "--corpus", &path_str(&corpus_path),
        "--tags", &path_str(&tags_path),
        "--years", "2013:2013",
        "--family", "logistic",
        "--outcome", "new_finding",
        "--predictor", "u",
        "--out", &path_str(&out_csv),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_csv.exists(), "failed fit must not leave outputs");
}

#[test]
fn study_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let config = path_str(&fixtures().join("study.toml"));
    for (out_dir, threads) in [(&a, "1"), (&b, "4")] {
        let out = run(&[
            "study",
            "--config", &config,
            "--out-dir", &path_str(out_dir),
            "--threads", threads,
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"fits.json".to_string()), "{names:?}");
    assert!(names.contains(&"run_manifest.json".to_string()));
    for name in &names {
        if name == "run_manifest.json" {
            continue; // contains wall-clock timestamps
        }
        let left = fs::read(a.join(name)).unwrap();
        let right = fs::read(b.join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between runs");
    }
}

#[test]
fn synth_ingest_index_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("synth.jsonl");
    let tags = dir.path().join("synth_tags.jsonl");
    let out = run(&[
        "synth",
        "--seed", "11",
        "--papers", "200",
        "--journals", "20",
        "--year-count", "6",
        "--start-year", "2008",
        "--refs", "5",
        "--out", &path_str(&corpus),
        "--tags-out", &path_str(&tags),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&corpus).unwrap().lines().count(), 200);

    // same seed, same bytes
    let corpus2 = dir.path().join("synth2.jsonl");
    let tags2 = dir.path().join("synth_tags2.jsonl");
    let out = run(&[
        "synth",
        "--seed", "11",
        "--papers", "200",
        "--journals", "20",
        "--year-count", "6",
        "--start-year", "2008",
        "--refs", "5",
        "--out", &path_str(&corpus2),
        "--tags-out", &path_str(&tags2),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(&corpus).unwrap(), fs::read(&corpus2).unwrap());
    assert_eq!(fs::read(&tags).unwrap(), fs::read(&tags2).unwrap());

    // the synthetic corpus flows through ingest, index, and stats
    let normalized = dir.path().join("normalized.jsonl");
    let out = run(&[
        "ingest",
        "--corpus", &path_str(&corpus),
        "--out", &path_str(&normalized),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let snapshot = dir.path().join("index.ncix");
    let dump = dir.path().join("index.csv");
    let out = run(&[
        "index",
        "--corpus", &path_str(&normalized),
        "--years", "2009:2012",
        "--out", &path_str(&snapshot),
        "--dump-csv", &path_str(&dump),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(&fs::read(&snapshot).unwrap()[..4], b"NCIX");
    assert!(fs::read_to_string(&dump)
        .unwrap()
        .starts_with("year,journal_lo,journal_hi,count"));

    let stats = dir.path().join("stats.csv");
    let out = run(&[
        "stats",
        "--corpus", &path_str(&corpus),
        "--years", "2009:2012",
        "--out", &path_str(&stats),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&stats).unwrap().lines().count() > 1);
}
