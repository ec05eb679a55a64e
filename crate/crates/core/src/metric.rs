//! Edge F1 over primary and remote edges, implicit-argument F1, and
//! Cohen's kappa for agreement studies.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::codec::Document;
use crate::graph::{EdgeAttr, EdgeLabel, Graph, GraphError};

pub const UNMATCHED: &str = "UNMATCHED";

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("graphs do not share the same token sequence")]
    TokenMismatch,
    #[error("corpora are not aligned: {0}")]
    Unaligned(String),
    #[error("kappa undefined: expected agreement is 1 or the table is empty")]
    DegenerateKappa,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Precision, recall and F1 with the counts they came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub gold_total: usize,
    pub pred_total: usize,
}

impl Prf {
    /// An empty denominator scores 1 (nothing predicted is nothing wrong).
    pub fn from_counts(matched: usize, gold_total: usize, pred_total: usize) -> Prf {
        let precision = if pred_total == 0 {
            1.0
        } else {
            matched as f64 / pred_total as f64
        };
        let recall = if gold_total == 0 {
            1.0
        } else {
            matched as f64 / gold_total as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
            matched,
            gold_total,
            pred_total,
        }
    }
}

impl Serialize for Prf {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire {
            p: f64,
            r: f64,
            f: f64,
            matched: usize,
            gold: usize,
            pred: usize,
        }
        Wire {
            p: self.precision,
            r: self.recall,
            f: self.f1,
            matched: self.matched,
            gold: self.gold_total,
            pred: self.pred_total,
        }
        .serialize(s)
    }
}

/// Micro-average: counts are summed before the ratios are taken.
pub fn corpus_prf<'a>(scores: impl IntoIterator<Item = &'a Prf>) -> Prf {
    let (m, g, p) = scores.into_iter().fold((0, 0, 0), |(m, g, p), s| {
        (m + s.matched, g + s.gold_total, p + s.pred_total)
    });
    Prf::from_counts(m, g, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeClass {
    Primary,
    Remote,
}

fn check_tokens(gold: &Graph, pred: &Graph) -> Result<(), MetricError> {
    if gold.terminal_texts() == pred.terminal_texts() {
        Ok(())
    } else {
        Err(MetricError::TokenMismatch)
    }
}

fn size_of_intersection<K: Ord>(a: &BTreeMap<K, usize>, b: &BTreeMap<K, usize>) -> usize {
    a.iter()
        .filter_map(|(k, &n)| b.get(k).map(|&m| n.min(m)))
        .sum()
}

fn edge_keys(g: &Graph, attr: EdgeAttr) -> Result<BTreeMap<(BTreeSet<usize>, crate::graph::Category), usize>, MetricError> {
    let mut keys = BTreeMap::new();
    for e in g.edges().iter().filter(|e| e.attr == attr) {
        *keys
            .entry((g.primary_yield(e.tgt)?, e.label.category))
            .or_insert(0) += 1;
    }
    Ok(keys)
}

/// Labelled edge F1: an edge matches when its child's primary yield and its
/// category agree. Implicit edges never take part.
pub fn edge_f1(gold: &Graph, pred: &Graph, which: EdgeClass) -> Result<Prf, MetricError> {
    check_tokens(gold, pred)?;
    let attr = match which {
        EdgeClass::Primary => EdgeAttr::Primary,
        EdgeClass::Remote => EdgeAttr::Remote,
    };
    let g = edge_keys(gold, attr)?;
    let p = edge_keys(pred, attr)?;
    Ok(Prf::from_counts(
        size_of_intersection(&g, &p),
        g.values().sum(),
        p.values().sum(),
    ))
}

/// How implicit matches are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImplicitCounting {
    /// One unit per parent; labelled matching requires equal label multisets.
    #[default]
    Group,
    /// One unit per implicit node; labels are matched as a multiset
    /// intersection under equal parent yields.
    Unit,
}

/// Implicit groups keyed by parent yield. Parents sharing a yield are merged;
/// the second value counts how many merges happened.
pub fn groups_by_yield(g: &Graph) -> Result<(BTreeMap<BTreeSet<usize>, Vec<EdgeLabel>>, usize), MetricError> {
    let mut out: BTreeMap<BTreeSet<usize>, Vec<EdgeLabel>> = BTreeMap::new();
    let mut merged = 0;
    for group in g.implicit_groups()? {
        match out.get_mut(&group.yield_) {
            Some(labels) => {
                merged += 1;
                labels.extend(group.labels);
                labels.sort();
            }
            None => {
                out.insert(group.yield_, group.labels);
            }
        }
    }
    if merged > 0 {
        log::warn!("{merged} implicit parent(s) share a yield with another parent and were merged");
    }
    Ok((out, merged))
}

pub fn implicit_f1(gold: &Graph, pred: &Graph, labelled: bool) -> Result<Prf, MetricError> {
    implicit_f1_with(gold, pred, labelled, ImplicitCounting::Group)
}

pub fn implicit_f1_with(
    gold: &Graph,
    pred: &Graph,
    labelled: bool,
    counting: ImplicitCounting,
) -> Result<Prf, MetricError> {
    check_tokens(gold, pred)?;
    let (g, _) = groups_by_yield(gold)?;
    let (p, _) = groups_by_yield(pred)?;
    Ok(match counting {
        ImplicitCounting::Group => {
            let matched = g
                .iter()
                .filter(|(y, labels)| match p.get(*y) {
                    Some(other) => !labelled || other == *labels,
                    None => false,
                })
                .count();
            Prf::from_counts(matched, g.len(), p.len())
        }
        ImplicitCounting::Unit => {
            let mut matched = 0;
            for (y, labels) in &g {
                if let Some(other) = p.get(y) {
                    matched += if labelled {
                        let count = |ls: &[EdgeLabel]| {
                            let mut m = BTreeMap::new();
                            for l in ls {
                                *m.entry(*l).or_insert(0) += 1;
                            }
                            m
                        };
                        size_of_intersection(&count(labels), &count(other))
                    } else {
                        labels.len().min(other.len())
                    };
                }
            }
            Prf::from_counts(
                matched,
                g.values().map(Vec::len).sum(),
                p.values().map(Vec::len).sum(),
            )
        }
    })
}

/// Rendering of a label multiset as used in confusion tables: short names
/// sorted and joined with `|`.
pub fn label_set_name(labels: &[EdgeLabel]) -> String {
    let mut names: Vec<String> = labels.iter().map(EdgeLabel::short_name).collect();
    names.sort();
    names.join("|")
}

/// Square count table over label-set names plus the UNMATCHED class.
/// Rows are the reference side, columns the compared side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    cells: BTreeMap<(String, String), u64>,
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, row: &str, col: &str, count: u64) {
        if count > 0 {
            *self
                .cells
                .entry((row.to_string(), col.to_string()))
                .or_insert(0) += count;
        }
    }

    pub fn get(&self, row: &str, col: &str) -> u64 {
        self.cells
            .get(&(row.to_string(), col.to_string()))
            .copied()
            .unwrap_or(0)
    }

    /// Union of row and column labels, UNMATCHED first, then sorted.
    pub fn labels(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.cells.keys().flat_map(|(r, c)| [r, c]).collect();
        let mut out: Vec<String> = Vec::with_capacity(set.len());
        if set.iter().any(|l| *l == UNMATCHED) {
            out.push(UNMATCHED.to_string());
        }
        out.extend(set.into_iter().filter(|l| *l != UNMATCHED).cloned());
        out
    }

    pub fn total(&self) -> u64 {
        self.cells.values().sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for ((r, c), n) in &other.cells {
            self.add(r, c, *n);
        }
    }

    /// Tab-separated table with a header row.
    pub fn to_tsv(&self) -> String {
        let labels = self.labels();
        let mut out = String::from("actual\\predicted");
        for l in &labels {
            out.push('\t');
            out.push_str(l);
        }
        out.push('\n');
        for r in &labels {
            out.push_str(r);
            for c in &labels {
                out.push('\t');
                out.push_str(&self.get(r, c).to_string());
            }
            out.push('\n');
        }
        out
    }
}

impl Serialize for ConfusionMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let labels = self.labels();
        let rows: Vec<Vec<u64>> = labels
            .iter()
            .map(|r| labels.iter().map(|c| self.get(r, c)).collect())
            .collect();
        #[derive(Serialize)]
        struct Wire<'a> {
            labels: &'a [String],
            counts: Vec<Vec<u64>>,
        }
        Wire {
            labels: &labels,
            counts: rows,
        }
        .serialize(s)
    }
}

/// Cohen's kappa over the span-matched part of the table: the UNMATCHED row
/// and column are dropped and label names are compared as exact strings.
pub fn cohen_kappa(m: &ConfusionMatrix) -> Result<f64, MetricError> {
    let labels: Vec<String> = m
        .labels()
        .into_iter()
        .filter(|l| l != UNMATCHED)
        .collect();
    let mut n = 0.0;
    let mut diagonal = 0.0;
    let mut row_sums = vec![0.0; labels.len()];
    let mut col_sums = vec![0.0; labels.len()];
    for (i, r) in labels.iter().enumerate() {
        for (j, c) in labels.iter().enumerate() {
            let x = m.get(r, c) as f64;
            n += x;
            row_sums[i] += x;
            col_sums[j] += x;
            if i == j {
                diagonal += x;
            }
        }
    }
    if n == 0.0 {
        return Err(MetricError::DegenerateKappa);
    }
    let observed = diagonal / n;
    let expected: f64 = row_sums
        .iter()
        .zip(&col_sums)
        .map(|(r, c)| r * c)
        .sum::<f64>()
        / (n * n);
    if (1.0 - expected).abs() < 1e-12 {
        return Err(MetricError::DegenerateKappa);
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Confusion table of implicit label sets for one graph pair.
pub fn implicit_confusion(gold: &Graph, other: &Graph) -> Result<ConfusionMatrix, MetricError> {
    check_tokens(gold, other)?;
    let (g, _) = groups_by_yield(gold)?;
    let (o, _) = groups_by_yield(other)?;
    let mut m = ConfusionMatrix::new();
    for (y, labels) in &g {
        let col = o
            .get(y)
            .map(|l| label_set_name(l))
            .unwrap_or_else(|| UNMATCHED.to_string());
        m.add(&label_set_name(labels), &col, 1);
    }
    for (y, labels) in &o {
        if !g.contains_key(y) {
            m.add(UNMATCHED, &label_set_name(labels), 1);
        }
    }
    Ok(m)
}

fn check_aligned(gold: &[Document], other: &[Document]) -> Result<(), MetricError> {
    if gold.len() != other.len() {
        return Err(MetricError::Unaligned(format!(
            "{} reference documents vs {} compared",
            gold.len(),
            other.len()
        )));
    }
    for (a, b) in gold.iter().zip(other) {
        if a.id != b.id {
            return Err(MetricError::Unaligned(format!(
                "document {:?} paired with {:?}",
                a.id, b.id
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub labelled: Prf,
    pub unlabelled: Prf,
    pub confusion: ConfusionMatrix,
    /// `None` when kappa is undefined for the table.
    pub kappa: Option<f64>,
}

pub fn agreement_report(gold: &[Document], other: &[Document]) -> Result<AgreementReport, MetricError> {
    check_aligned(gold, other)?;
    let mut labelled = Vec::new();
    let mut unlabelled = Vec::new();
    let mut confusion = ConfusionMatrix::new();
    for (a, b) in gold.iter().zip(other) {
        labelled.push(implicit_f1(&a.graph, &b.graph, true)?);
        unlabelled.push(implicit_f1(&a.graph, &b.graph, false)?);
        confusion.merge(&implicit_confusion(&a.graph, &b.graph)?);
    }
    Ok(AgreementReport {
        labelled: corpus_prf(&labelled),
        unlabelled: corpus_prf(&unlabelled),
        kappa: cohen_kappa(&confusion).ok(),
        confusion,
    })
}

/// The evaluation report. Serializes to the documented four-key object,
/// plus `merged_parents` when parents sharing a yield were merged.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub primary: Prf,
    pub remote: Prf,
    pub implicit_labelled: Prf,
    pub implicit_unlabelled: Prf,
    #[serde(skip_serializing_if = "is_zero")]
    pub merged_parents: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

pub fn evaluate_pair(gold: &Graph, pred: &Graph, counting: ImplicitCounting) -> Result<EvalReport, MetricError> {
    Ok(EvalReport {
        primary: edge_f1(gold, pred, EdgeClass::Primary)?,
        remote: edge_f1(gold, pred, EdgeClass::Remote)?,
        implicit_labelled: implicit_f1_with(gold, pred, true, counting)?,
        implicit_unlabelled: implicit_f1_with(gold, pred, false, counting)?,
        merged_parents: groups_by_yield(gold)?.1 + groups_by_yield(pred)?.1,
    })
}

/// Micro-averaged report over aligned corpora.
pub fn evaluate_corpus(gold: &[Document], pred: &[Document], counting: ImplicitCounting) -> Result<EvalReport, MetricError> {
    check_aligned(gold, pred)?;
    let pairs = gold
        .iter()
        .zip(pred)
        .map(|(g, p)| evaluate_pair(&g.graph, &p.graph, counting))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport {
        primary: corpus_prf(pairs.iter().map(|r| &r.primary)),
        remote: corpus_prf(pairs.iter().map(|r| &r.remote)),
        implicit_labelled: corpus_prf(pairs.iter().map(|r| &r.implicit_labelled)),
        implicit_unlabelled: corpus_prf(pairs.iter().map(|r| &r.implicit_unlabelled)),
        merged_parents: pairs.iter().map(|r| r.merged_parents).sum(),
    })
}
