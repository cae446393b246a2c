use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn advlex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_advlex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = advlex(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small synthetic corpus with strong signal, written into `dir`.
fn corpus(dir: &Path, n_docs: &str, signal: &str) -> PathBuf {
    ok(&["--out", s(dir), "synth", "--n-docs", n_docs, "--s", signal]);
    dir.join("corpus.jsonl")
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn cv_on_separable_corpus_is_near_perfect() {
    let dir = TempDir::new().unwrap();
    let c = corpus(dir.path(), "300", "0.4");
    let table = ok(&["--corpus", s(&c), "--out", s(dir.path()), "cv", "--folds", "5"]);
    assert!(table.contains("linearSVC"));
    let report = read(dir.path().join("cv_report.csv"));
    let mut lines = report.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "accuracy_mean").unwrap();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "tfidf");
    assert_eq!(row[2], "5");
    let acc: f64 = row[col].parse().unwrap();
    assert!(acc >= 0.99, "{acc}");
}

#[test]
fn cv_all_models_reports_every_combination() {
    let dir = TempDir::new().unwrap();
    let c = corpus(dir.path(), "120", "0.4");
    ok(&["--corpus", s(&c), "--out", s(dir.path()), "cv", "--folds", "3", "--all-models"]);
    let report = read(dir.path().join("cv_report.csv"));
    assert_eq!(report.lines().count(), 1 + 12);
    assert_eq!(report.lines().filter(|l| l.starts_with("bow,")).count(), 6);
}

#[test]
fn lexicon_scores_a_single_line() {
    let dir = TempDir::new().unwrap();
    let c = corpus(dir.path(), "200", "0.4");
    ok(&["--corpus", s(&c), "--out", s(dir.path()), "lexicon", "derive"]);
    let lex = dir.path().join("lexicon.csv");
    assert!(read(&lex).starts_with("term,weight\n"));
    let meta: serde_json::Value = serde_json::from_str(&read(dir.path().join("lexicon.meta.json"))).unwrap();
    assert_eq!(meta["model_kind"], "linear_svm");
    let model: serde_json::Value = serde_json::from_str(&read(dir.path().join("model.json"))).unwrap();
    assert_eq!(model["vocab_hash"], meta["vocab_hash"]);

    let line = ok(&["lexicon", "score", "--lexicon", s(&lex), "--text", "cm1 cm2 cm3 bg4"]);
    assert_eq!(line.lines().count(), 1);
    assert!(line.starts_with("weighted "), "{line}");
    assert!(line.trim_end().ends_with("commercial"), "{line}");
    let line = ok(&["lexicon", "score", "--lexicon", s(&lex), "--text", "ed1 ed2 ed3"]);
    assert!(line.trim_end().ends_with("editorial"), "{line}");

    ok(&["--corpus", s(&c), "--out", s(dir.path()), "lexicon", "score", "--lexicon", s(&lex)]);
    assert_eq!(read(dir.path().join("scores.csv")).lines().count(), 201);
    let modes = ok(&["--corpus", s(&c), "--out", s(dir.path()), "lexicon", "hist", "--lexicon", s(&lex), "--bins", "10"]);
    assert!(modes.contains("commercial mode"));
    assert_eq!(read(dir.path().join("histogram.csv")).lines().count(), 11);
}

#[test]
fn crossdomain_has_a_row_per_medium_and_marginals() {
    let dir = TempDir::new().unwrap();
    let c = corpus(dir.path(), "200", "0.4");
    ok(&["--corpus", s(&c), "--out", s(dir.path()), "crossdomain"]);
    let csv = read(dir.path().join("crossdomain.csv"));
    let first: Vec<&str> = csv.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(first, ["medium", "medium0", "medium1", "medium2", "medium3", "mean", "std"]);
}

#[test]
fn cooc_tsne_sweep_and_audit_write_their_artifacts() {
    let dir = TempDir::new().unwrap();
    let c = corpus(dir.path(), "80", "0.4");
    let base = ["--corpus", s(&c), "--out", s(dir.path())];
    let run = |extra: &[&str]| ok(&[&base[..], extra].concat());
    run(&["cooc", "--threshold", "0.2", "--top-terms", "20"]);
    let graph: serde_json::Value = serde_json::from_str(&read(dir.path().join("cooc.json"))).unwrap();
    let nodes: Vec<&str> = graph["nodes"].as_array().unwrap().iter().map(|n| n["id"].as_str().unwrap()).collect();
    let edges = graph["edges"].as_array().unwrap();
    assert!(!edges.is_empty() && nodes.len() <= 20);
    for e in edges {
        assert!(nodes.contains(&e["from"].as_str().unwrap()) && nodes.contains(&e["to"].as_str().unwrap()));
        assert!(e["weight"].as_f64().unwrap() >= 0.2);
    }
    assert!(read(dir.path().join("cooc.dot")).starts_with("digraph"));

    let out = advlex(&[&base[..], &["tsne", "--iters", "100", "--perplexity", "10"]].concat());
    assert!(out.status.success());
    let progress = String::from_utf8(out.stderr).unwrap();
    assert!(progress.contains("iter,kl\n"));
    assert!(progress.lines().any(|l| l.starts_with("50,")));
    assert_eq!(read(dir.path().join("tsne.csv")).lines().count(), 81);

    run(&["sweep", "--steps", "10,100", "--folds", "3"]);
    assert_eq!(read(dir.path().join("sweep.csv")).lines().count(), 3);

    run(&["audit-leakers", "--top", "5"]);
    let audit = read(dir.path().join("leaker_candidates.csv"));
    assert_eq!(audit.lines().count(), 6);
    assert!(audit.starts_with("term,weight,class_exclusivity,medium_exclusivity,score\n"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let runs: Vec<TempDir> = (0..2).map(|_| TempDir::new().unwrap()).collect();
    for dir in &runs {
        let c = corpus(dir.path(), "150", "0.2");
        let base = ["--corpus", s(&c), "--out", s(dir.path())];
        ok(&[&base[..], &["cv", "--folds", "5"]].concat());
        ok(&[&base[..], &["lexicon", "derive", "--created", "2020-01-01"]].concat());
        ok(&[&base[..], &["tsne", "--iters", "150"]].concat());
        ok(&[&base[..], &["cooc", "--threshold", "0.3"]].concat());
    }
    for name in [
        "corpus.jsonl",
        "ground_truth.json",
        "cv_report.csv",
        "lexicon.csv",
        "lexicon.meta.json",
        "model.json",
        "tsne.csv",
        "cooc.json",
        "cooc.dot",
    ] {
        let a = std::fs::read(runs[0].path().join(name)).unwrap();
        let b = std::fs::read(runs[1].path().join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"seed": 3, "max_featurez": 10}"#).unwrap();
    let out = advlex(&["--config", s(&cfg), "config"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_featurez"));

    std::fs::write(&cfg, r#"{"model": {"kind": "linear_svm", "c": 2.0}}"#).unwrap();
    let out = advlex(&["--config", s(&cfg), "config"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`c`"));
}

#[test]
fn missing_corpus_fails() {
    let dir = TempDir::new().unwrap();
    let out = advlex(&["--corpus", s(&dir.path().join("absent.jsonl")), "--out", s(dir.path()), "cv"]);
    assert_eq!(out.status.code(), Some(2));
    let out = advlex(&["--out", s(dir.path()), "cv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("cv_report.csv").exists());
}

#[test]
fn malformed_corpus_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let c = dir.path().join("bad.jsonl");
    std::fs::write(&c, "{\"id\": \"a\", \"medium\": \"m\", \"label\": \"neither\", \"body\": \"x\"}\n").unwrap();
    let out = advlex(&["--corpus", s(&c), "--out", s(dir.path()), "cv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(advlex(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(advlex(&["--model", "perceptron", "config"]).status.code(), Some(1));
    assert_eq!(advlex(&["--help"]).status.code(), Some(0));

    let dir = TempDir::new().unwrap();
    let c = corpus(dir.path(), "60", "0.4");
    let out = advlex(&["--corpus", s(&c), "--out", s(dir.path()), "--model", "knn", "lexicon", "derive"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("linear"));
}

#[test]
fn default_config_is_the_final_model() {
    let cfg: serde_json::Value = serde_json::from_str(&ok(&["config"])).unwrap();
    assert_eq!(cfg["representation"], "tfidf");
    assert_eq!(cfg["max_features"], 5000);
    assert_eq!(cfg["seed"], 2);
    assert_eq!(cfg["folds"], 10);
    assert_eq!(cfg["model"]["kind"], "linear_svm");
    assert_eq!(cfg["model"]["C"], 1.0);
    assert_eq!(cfg["model"]["max_iter"], 5000);
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("run.json");
    std::fs::write(&file, r#"{"seed": 7, "max_features": 300, "model": {"kind": "sgd"}}"#).unwrap();
    let cfg: serde_json::Value = serde_json::from_str(&ok(&["--config", s(&file), "--seed", "9", "config"])).unwrap();
    assert_eq!(cfg["seed"], 9);
    assert_eq!(cfg["max_features"], 300);
    assert_eq!(cfg["model"]["kind"], "sgd");
    assert_eq!(cfg["representation"], "tfidf");
}
