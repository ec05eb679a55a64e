mod common;

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ucca-implicit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fx(name: &str) -> String {
    common::fixture(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn validate_exit_codes() {
    let ok = run(&["validate", &fx("oracle_corpus.jsonl"), &fx("fig2a_pred.jsonl")]);
    assert_eq!(ok.status.code(), Some(0));

    let bad = run(&["validate", &fx("invalid_implicit_child.jsonl")]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("ImplicitNotLeaf"), "{}", stdout(&bad));

    let missing = run(&["validate", "/nonexistent/corpus.jsonl"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["evaluate", &fx("fig2a_gold.jsonl")]).status.code(), Some(2));
    assert_eq!(run(&["oracle-check", "--system", "arc-eager", "x"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn stats_single_and_multiple_files() {
    let one = json(&run(&["stats", &fx("stats_dev.jsonl")]));
    assert_eq!(one["implicit_total"], 56);
    assert_eq!(one["sentences"], 59);

    let all = run(&["stats", &fx("stats_train.jsonl"), &fx("stats_dev.jsonl"), &fx("stats_eval.jsonl")]);
    assert!(all.status.success());
    let v = json(&all);
    let totals: Vec<_> = v["splits"].as_array().unwrap().iter().map(|s| s["implicit_total"].clone()).collect();
    assert_eq!(totals, [274, 56, 61]);
    let t = &v["total"];
    let by_type: Vec<_> = ["deictic", "generic", "genre-based", "type-identifiable", "non-specific", "iterated-set"]
        .iter()
        .map(|k| t[k].as_u64().unwrap())
        .collect();
    assert_eq!(by_type, [107, 86, 147, 6, 36, 9]);
    assert_eq!(t["implicit_total"], 391);
}

#[test]
fn evaluate_prediction_files() {
    let out = run(&["evaluate", &fx("fig2b_gold.jsonl"), &fx("fig2b_pred.jsonl")]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["implicit_labelled"]["f"], 0.5);
    assert_eq!(v["implicit_unlabelled"]["f"], 1.0);
    for key in ["primary", "remote"] {
        assert!(v[key].is_object());
    }

    let only = json(&run(&["evaluate", &fx("fig2a_gold.jsonl"), &fx("fig2a_pred.jsonl"), "--labelled-only"]));
    assert_eq!(only.as_object().unwrap().len(), 1);
    assert_eq!(only["implicit_labelled"]["p"], 0.0);

    let agreement = json(&run(&["evaluate", &fx("fig2a_gold.jsonl"), &fx("fig2a_pred.jsonl"), "--agreement"]));
    assert_eq!(agreement["kappa"], 0.0);
    assert!(agreement["confusion"]["labels"].as_array().unwrap().len() >= 3);

    let unit = json(&run(&["evaluate", &fx("fig2b_gold.jsonl"), &fx("fig2b_pred.jsonl"), "--unit-level-metric"]));
    assert_eq!(unit["implicit_labelled"]["gold"], 3);

    let gate = run(&["evaluate", &fx("fig2a_gold.jsonl"), &fx("fig2a_pred.jsonl"), "--min-implicit-f1", "0.5"]);
    assert_eq!(gate.status.code(), Some(1));
}

#[test]
fn misaligned_corpora_are_an_error() {
    let out = run(&["evaluate", &fx("fig2a_gold.jsonl"), &fx("fig2b_pred.jsonl")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_check_reports_full_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "oracle-check",
        &fx("oracle_corpus.jsonl"),
        "--trace-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("eager: 35/35 documents, 100.0% round-trip"), "{text}");
    assert!(text.contains("standard: 35/35 documents, 100.0% round-trip"), "{text}");
    let trace = std::fs::read_to_string(dir.path().join("r001.1.standard.trace")).unwrap();
    assert!(trace.lines().any(|l| l == "RIGHT-EDGE A+genre-based"));
    assert_eq!(trace.lines().last(), Some("FINISH"));
}

fn train(dir: &Path, system: &str) -> String {
    let model = dir.join(format!("{system}.json")).display().to_string();
    let out = run(&[
        "--jobs", "2", "train", &fx("overfit.jsonl"), "--model", &model, "--system", system, "--epochs", "5", "--seed", "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["epochs"].as_array().unwrap().len(), 5);
    model
}

#[test]
fn train_parse_and_emit_dot() {
    let dir = tempfile::tempdir().unwrap();
    let model = train(dir.path(), "eager");
    let text = dir.path().join("in.txt");
    std::fs::write(&text, "Great service !\nFriendly staff .\n").unwrap();
    let parsed = dir.path().join("out.jsonl");
    let dots = dir.path().join("dots");
    let out = run(&[
        "parse",
        text.to_str().unwrap(),
        "--model",
        &model,
        "--system",
        "eager",
        "-o",
        parsed.to_str().unwrap(),
        "--emit-dot",
        dots.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let docs = ucca_implicit::codec::read_corpus(&std::fs::read_to_string(&parsed).unwrap()).unwrap();
    assert_eq!(docs.len(), 2);
    assert_eq!(docs[0].token_texts(), ["Great", "service", "!"]);
    let first = std::fs::read_to_string(dots.join("line1.dot")).unwrap();
    assert!(first.starts_with("digraph"));
    assert!(dots.join("line2.dot").exists());

    // same input, same bytes
    let again = run(&["parse", text.to_str().unwrap(), "--model", &model, "--system", "eager", "--emit-dot", dots.to_str().unwrap()]);
    assert!(again.status.success());
    assert_eq!(std::fs::read_to_string(dots.join("line1.dot")).unwrap(), first);
    assert_eq!(stdout(&again), std::fs::read_to_string(&parsed).unwrap());
}

#[test]
fn model_system_must_match() {
    let dir = tempfile::tempdir().unwrap();
    let model = train(dir.path(), "standard");
    let out = run(&["evaluate", &fx("overfit.jsonl"), "--model", &model, "--system", "eager"]);
    assert_eq!(out.status.code(), Some(2));
    let ok = run(&["evaluate", &fx("overfit.jsonl"), "--model", &model, "--system", "standard"]);
    assert!(ok.status.success());
    assert!(json(&ok)["guard_triggered"].is_u64());
}

#[test]
fn binary_models_load() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.bin");
    let out = run(&[
        "train", &fx("overfit.jsonl"), "--model", model.to_str().unwrap(), "--epochs", "2", "--model-format", "binary",
    ]);
    assert!(out.status.success());
    let eval = run(&["evaluate", &fx("overfit.jsonl"), "--model", model.to_str().unwrap()]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
}

#[test]
fn convert_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let pretty = dir.path().join("corpus.json");
    let back = dir.path().join("corpus.jsonl");
    let src = fx("oracle_corpus.jsonl");
    assert!(run(&["convert", &src, "-o", pretty.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&pretty).unwrap();
    assert!(text.starts_with("[\n"));
    assert!(run(&["convert", pretty.to_str().unwrap(), "--to", "jsonl", "-o", back.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read_to_string(&back).unwrap(), std::fs::read_to_string(&src).unwrap());

    let from_brackets = run(&["convert", &fx("oracle_corpus.txt")]);
    assert!(from_brackets.status.success());
    assert_eq!(stdout(&from_brackets), std::fs::read_to_string(&src).unwrap());
}

#[test]
fn empty_file_has_zero_stats() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let v = json(&run(&["stats", empty.to_str().unwrap()]));
    assert_eq!(v["sentences"], 0);
    assert_eq!(v["implicit_total"], 0);
}

#[test]
fn identical_files_score_one() {
    let v = json(&run(&["evaluate", &fx("oracle_corpus.jsonl"), &fx("oracle_corpus.jsonl")]));
    for key in ["primary", "remote", "implicit_labelled", "implicit_unlabelled"] {
        assert_eq!(v[key]["f"], 1.0, "{key}");
    }
}

#[test]
fn training_is_reproducible_given_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = train(a.path(), "standard");
    let mb = train(b.path(), "standard");
    assert_eq!(std::fs::read(ma).unwrap(), std::fs::read(mb).unwrap());
}
