//! Sparse hashed features over parser configurations.

use std::hash::Hasher;

use fnv::FnvHasher;

use crate::graph::{EdgeAttr, NodeId};
use crate::transitions::{ParserState, StateNodeKind};

/// Feature ids live in `0..2^HASH_BITS`.
pub const HASH_BITS: u32 = 20;

/// Template names. Every feature string starts with one of these followed
/// by `=`.
pub const TEMPLATES: [&str; 46] = [
    "bias",
    "s0.kind",
    "s1.kind",
    "s2.kind",
    "b0.kind",
    "b1.kind",
    "s0.form",
    "s1.form",
    "s2.form",
    "b0.form",
    "b1.form",
    "s0.shape",
    "s1.shape",
    "b0.shape",
    "b1.shape",
    "s0.first",
    "s0.last",
    "s1.first",
    "s1.last",
    "b0.first",
    "s0.in",
    "s1.in",
    "b0.in",
    "s0.out",
    "s0.outset",
    "s1.outset",
    "s1.outset|s0.kind",
    "s1.head|s1.outset",
    "s1.out",
    "s0.nchild",
    "s1.nchild",
    "s0.imp",
    "s0.parent",
    "s1.parent",
    "s0s1.kinds",
    "s0s1.in",
    "s0b0.form",
    "s0.in|b0.kind",
    "order",
    "depth",
    "buffer",
    "a1",
    "a2",
    "a3",
    "a1a2",
    "a1|s0.kind",
];

/// Hashed feature ids, sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureVector {
    ids: Vec<u32>,
}

impl FeatureVector {
    pub fn from_strings<S: AsRef<str>>(features: &[S]) -> Self {
        let mut ids: Vec<u32> = features.iter().map(|f| hash_feature(f.as_ref())).collect();
        ids.sort_unstable();
        ids.dedup();
        FeatureVector { ids }
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub fn hash_feature(s: &str) -> u32 {
    let mut h = FnvHasher::default();
    h.write(s.as_bytes());
    (h.finish() & ((1u64 << HASH_BITS) - 1)) as u32
}

fn kind(st: &ParserState, v: Option<NodeId>) -> &'static str {
    match v.map(|v| st.node(v).kind) {
        None => "none",
        Some(StateNodeKind::Terminal) => "terminal",
        Some(StateNodeKind::Root) => "root",
        Some(StateNodeKind::Created) => "node",
        Some(StateNodeKind::Implicit) => "implicit",
    }
}

/// Character classes with runs collapsed: `Great` -> `Xx`, `3.5` -> `dpd`.
pub fn shape(form: &str) -> String {
    let mut out = String::new();
    for c in form.chars() {
        let class = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_numeric() {
            'd'
        } else {
            'p'
        };
        if !out.ends_with(class) {
            out.push(class);
        }
    }
    out
}

/// Leftmost and rightmost terminal forms under `v` via primary edges.
fn span_forms(st: &ParserState, v: NodeId) -> Option<(String, String)> {
    let mut todo = vec![v];
    let mut terminals = Vec::new();
    while let Some(x) = todo.pop() {
        if st.node(x).kind == StateNodeKind::Terminal {
            terminals.push(x);
        }
        todo.extend(st.outgoing(x).filter(|e| e.attr == EdgeAttr::Primary).map(|e| e.tgt));
    }
    let first = *terminals.iter().min()?;
    let last = *terminals.iter().max()?;
    Some((st.form(first)?.to_string(), st.form(last)?.to_string()))
}

fn in_label(st: &ParserState, v: Option<NodeId>) -> String {
    match v.and_then(|v| st.tree_parent_edge(v)) {
        Some(e) => e.label.trace_form(),
        None => "none".to_string(),
    }
}

fn bucket(n: usize) -> &'static str {
    match n {
        0 => "0",
        1 => "1",
        2 => "2",
        3 | 4 => "3-4",
        5..=9 => "5-9",
        _ => "10+",
    }
}

/// Feature strings for a state, in template order.
pub fn feature_strings(st: &ParserState) -> Vec<String> {
    let mut f = Vec::with_capacity(64);
    let s = [st.s(0), st.s(1), st.s(2)];
    let b = [st.b(0), st.b(1)];
    f.push("bias=1".to_string());

    let named: [(&str, Option<NodeId>); 5] = [("s0", s[0]), ("s1", s[1]), ("s2", s[2]), ("b0", b[0]), ("b1", b[1])];
    for (name, v) in named {
        f.push(format!("{name}.kind={}", kind(st, v)));
    }
    for (name, v) in named {
        if let Some(form) = v.and_then(|v| st.form(v)) {
            f.push(format!("{name}.form={form}"));
        }
    }
    for (name, v) in [("s0", s[0]), ("s1", s[1]), ("b0", b[0]), ("b1", b[1])] {
        if let Some(form) = v.and_then(|v| st.form(v)) {
            f.push(format!("{name}.shape={}", shape(form)));
        }
    }
    for (name, v) in [("s0", s[0]), ("s1", s[1]), ("b0", b[0])] {
        let Some(v) = v else { continue };
        if st.node(v).kind != StateNodeKind::Created {
            continue;
        }
        if let Some((first, last)) = span_forms(st, v) {
            f.push(format!("{name}.first={first}"));
            if name != "b0" {
                f.push(format!("{name}.last={last}"));
            }
        }
    }
    for (name, v) in [("s0", s[0]), ("s1", s[1]), ("b0", b[0])] {
        if v.is_some() {
            f.push(format!("{name}.in={}", in_label(st, v)));
        }
    }
    for (name, v) in [("s0", s[0]), ("s1", s[1])] {
        let Some(v) = v else { continue };
        let mut labels: Vec<String> = st.outgoing(v).map(|e| e.label.trace_form()).collect();
        labels.sort();
        labels.dedup();
        for l in &labels {
            f.push(format!("{name}.out={l}"));
        }
        let n = st.outgoing(v).filter(|e| e.attr.is_tree()).count();
        f.push(format!("{name}.nchild={}", bucket(n)));
        let set = labels.join(",");
        if name == "s1" {
            f.push(format!("s1.outset|s0.kind={set}|{}", kind(st, s[0])));
            if let Some((first, last)) = span_forms(st, v) {
                f.push(format!("s1.head|s1.outset={first}|{last}|{set}"));
            }
        }
        f.push(format!("{name}.outset={set}"));
    }
    if let Some(v) = s[0] {
        let n = st
            .outgoing(v)
            .filter(|e| e.attr == EdgeAttr::Implicit || e.label.refinement.is_some())
            .count();
        f.push(format!("s0.imp={}", bucket(n)));
    }
    for (name, v) in [("s0", s[0]), ("s1", s[1])] {
        if let Some(v) = v {
            f.push(format!("{name}.parent={}", st.tree_parent_edge(v).is_some()));
        }
    }
    f.push(format!("s0s1.kinds={}|{}", kind(st, s[0]), kind(st, s[1])));
    f.push(format!("s0s1.in={}|{}", in_label(st, s[0]), in_label(st, s[1])));
    if let (Some(x), Some(y)) = (s[0].and_then(|v| st.form(v)), b[0].and_then(|v| st.form(v))) {
        f.push(format!("s0b0.form={x}|{y}"));
    }
    f.push(format!("s0.in|b0.kind={}|{}", in_label(st, s[0]), kind(st, b[0])));
    if let (Some(x), Some(y)) = (s[0], s[1]) {
        f.push(format!("order={}", y < x));
    }
    f.push(format!("depth={}", bucket(st.stack().len())));
    f.push(format!("buffer={}", bucket(st.buffer().len())));

    let history = st.history();
    let last = |k: usize| {
        history
            .len()
            .checked_sub(k)
            .map(|i| history[i].to_string())
            .unwrap_or_else(|| "none".to_string())
    };
    let (a1, a2, a3) = (last(1), last(2), last(3));
    f.push(format!("a1|s0.kind={a1}|{}", kind(st, s[0])));
    f.push(format!("a1a2={a1}|{a2}"));
    f.push(format!("a1={a1}"));
    f.push(format!("a2={a2}"));
    f.push(format!("a3={a3}"));
    f
}

pub fn extract_features(st: &ParserState) -> FeatureVector {
    FeatureVector::from_strings(&feature_strings(st))
}
