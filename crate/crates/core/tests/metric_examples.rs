mod common;

use ucca_implicit::codec::Document;
use ucca_implicit::graph::EdgeLabel;
use ucca_implicit::metric::{
    agreement_report, cohen_kappa, evaluate_corpus, implicit_confusion, ConfusionMatrix, ImplicitCounting, Prf,
};
use ucca_implicit::model::{evaluate_model, Model};
use ucca_implicit::transitions::SystemKind;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn assert_triplet(p: &Prf, expected: f64) {
    assert!(
        close(p.precision, expected) && close(p.recall, expected) && close(p.f1, expected),
        "{p:?} != {expected}"
    );
}

fn pair(name: &str) -> (Vec<Document>, Vec<Document>) {
    (
        common::load_jsonl(&format!("{name}_gold.jsonl")),
        common::load_jsonl(&format!("{name}_pred.jsonl")),
    )
}

#[test]
fn parent_mismatch_example() {
    let (gold, pred) = pair("fig2a");
    let r = evaluate_corpus(&gold, &pred, ImplicitCounting::Group).unwrap();
    assert_triplet(&r.implicit_labelled, 0.0);
    assert_triplet(&r.implicit_unlabelled, 0.5);
}

#[test]
fn missing_refinement_example() {
    let (gold, pred) = pair("fig2b");
    let r = evaluate_corpus(&gold, &pred, ImplicitCounting::Group).unwrap();
    assert_triplet(&r.implicit_labelled, 0.5);
    assert_triplet(&r.implicit_unlabelled, 1.0);
}

#[test]
fn unit_level_counting_differs_on_missing_refinement() {
    let (gold, pred) = pair("fig2b");
    let r = evaluate_corpus(&gold, &pred, ImplicitCounting::Unit).unwrap();
    // two of three gold units are predicted, both correctly
    assert!(close(r.implicit_labelled.recall, 2.0 / 3.0));
    assert!(close(r.implicit_labelled.precision, 1.0));
}

#[test]
fn both_examples_as_one_corpus() {
    let (mut gold, mut pred) = pair("fig2a");
    let (g2, p2) = pair("fig2b");
    gold.extend(g2);
    pred.extend(p2);
    let r = evaluate_corpus(&gold, &pred, ImplicitCounting::Group).unwrap();
    assert_eq!(
        (r.implicit_labelled.matched, r.implicit_labelled.pred_total, r.implicit_labelled.gold_total),
        (1, 4, 4)
    );
    assert_triplet(&r.implicit_labelled, 0.25);
}

#[test]
fn parent_mismatch_confusion() {
    let (gold, pred) = pair("fig2a");
    let m = implicit_confusion(&gold[0].graph, &pred[0].graph).unwrap();
    assert_eq!(m.get("Non-specific", "Type-identifiable"), 1);
    assert_eq!(m.get("Non-specific", "UNMATCHED"), 1);
    assert_eq!(m.get("UNMATCHED", "Non-specific"), 1);
    assert_eq!(m.total(), 3);
    let report = agreement_report(&gold, &pred).unwrap();
    assert_eq!(report.kappa, Some(0.0));
}

#[test]
fn published_agreement_kappa() {
    let m = common::load_matrix("agreement_matrix.tsv");
    assert_eq!(m.total(), 56);
    let kappa = cohen_kappa(&m).unwrap();
    // 47 span-matched pairs, 35 on the diagonal. Row times column totals for
    // labels present on both axes: Nonspecific 8*6, Nonspecific|Generic 1*1,
    // Nonspecific|Type-identifiable 1*1, Deictic 8*8, Generic|Genre-based
    // 8*10, Genre-based 13*15, P 2*2.
    let po = 35.0 / 47.0;
    let pe = (48.0 + 1.0 + 1.0 + 64.0 + 80.0 + 195.0 + 4.0) / (47.0 * 47.0);
    assert!(close(kappa, (po - pe) / (1.0 - pe)), "{kappa}");
    assert!((kappa - 0.693).abs() <= 0.03, "{kappa}");
}

#[test]
fn hand_built_kappas() {
    let mut diag = ConfusionMatrix::new();
    for l in ["a", "b", "c"] {
        diag.add(l, l, 7);
    }
    assert!(close(cohen_kappa(&diag).unwrap(), 1.0));

    let mut uniform = ConfusionMatrix::new();
    for r in ["a", "b"] {
        for c in ["a", "b"] {
            uniform.add(r, c, 5);
        }
    }
    assert!(close(cohen_kappa(&uniform).unwrap(), 0.0));

    // po = 37/50, pe = (15*15 + 15*15 + 20*20)/2500 = 0.34
    let counts = [[10, 2, 3], [1, 12, 2], [4, 1, 15]];
    let labels = ["x", "y", "z"];
    let mut m = ConfusionMatrix::new();
    for (r, row) in labels.iter().zip(counts) {
        for (c, n) in labels.iter().zip(row) {
            m.add(r, c, n);
        }
    }
    assert!(close(cohen_kappa(&m).unwrap(), 20.0 / 33.0));
}

#[test]
fn published_prf_arithmetic() {
    let p = Prf::from_counts(9, 50, 22);
    assert_eq!(format!("{:.3} {:.3} {:.3}", p.precision, p.recall, p.f1), "0.409 0.180 0.250");
}

#[test]
fn empty_prediction_convention() {
    let gold = common::load_bracketed("oracle_corpus.txt");
    let labels: Vec<EdgeLabel> = ["H", "A", "U", "P"].iter().map(|s| s.parse().unwrap()).collect();
    for sys in [SystemKind::ImplicitEager, SystemKind::ImplicitStandard] {
        let (eval, pred) = evaluate_model(&Model::zero(sys, &labels), &gold, ImplicitCounting::Group).unwrap();
        assert!(pred.iter().all(|d| d.graph.implicit_nodes().next().is_none()));
        let p = eval.metrics.implicit_labelled;
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 0.0, 0.0));
        assert!(p.gold_total > 0);
    }
}
