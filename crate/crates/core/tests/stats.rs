mod common;

use ucca_implicit::codec::{corpus_stats, CorpusStats};

fn split(name: &str) -> CorpusStats {
    corpus_stats(&common::load_jsonl(&format!("stats_{name}.jsonl")))
}

#[test]
fn split_fixtures_match_published_counts() {
    let expected = [
        ("train", 285, 2671, 3936, [87, 59, 103, 3, 18, 4], 274),
        ("dev", 59, 540, 781, [11, 15, 19, 1, 10, 0], 56),
        ("eval", 49, 489, 709, [9, 12, 25, 2, 8, 5], 61),
    ];
    for (name, sentences, tokens, nodes, by_type, total) in expected {
        let s = split(name);
        assert_eq!((s.sentences, s.tokens, s.nodes), (sentences, tokens, nodes), "{name}");
        assert_eq!(s.by_refinement(), by_type, "{name}");
        assert_eq!(s.implicit_total, total, "{name}");
        assert_eq!(s.unrefined_implicit, 0);
    }
}

#[test]
fn totals_over_all_splits() {
    let total = split("train") + split("dev") + split("eval");
    assert_eq!(total.by_refinement(), [107, 86, 147, 6, 36, 9]);
    assert_eq!(total.implicit_total, 391);
    assert_eq!(total.sentences, 393);
}

#[test]
fn stats_are_additive() {
    let mut train = common::load_jsonl("stats_train.jsonl");
    let tail = train.split_off(100);
    let parts = corpus_stats(&train) + corpus_stats(&tail);
    train.extend(tail);
    assert_eq!(parts, corpus_stats(&train));
}

#[test]
fn passages_group_sentences() {
    let docs = common::load_bracketed("oracle_corpus.txt");
    let s = corpus_stats(&docs);
    // r005 has two sentences
    assert!(s.passages < s.sentences);
    assert_eq!(s.edges, docs.iter().map(|d| d.graph.edges().len()).sum::<usize>());
}
