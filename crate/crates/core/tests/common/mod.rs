#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ucca_implicit::codec::{bracket::parse_bracketed, read_corpus, Document};
use ucca_implicit::graph::{validate, Graph, GraphBuilder, NodeId, NodeKind};
use ucca_implicit::graph::EdgeAttr;
use ucca_implicit::metric::ConfusionMatrix;
use ucca_implicit::model::repair::repair;
use ucca_implicit::transitions::{max_steps, Action, ParserState, StateNodeKind, SystemKind};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Loads `id<TAB>bracketed` lines, skipping comments and blanks.
pub fn load_bracketed(name: &str) -> Vec<Document> {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (id, src) = l.split_once('\t').expect("id<TAB>graph");
            parse_bracketed(id, src).unwrap_or_else(|e| panic!("{id}: {e}"))
        })
        .collect()
}

pub fn load_jsonl(name: &str) -> Vec<Document> {
    read_corpus(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

/// Reads a `to_tsv`-style table: a header of column labels, then one row per
/// actual label.
pub fn load_matrix(name: &str) -> ConfusionMatrix {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    let mut lines = text.lines();
    let cols: Vec<&str> = lines.next().unwrap().split('\t').skip(1).collect();
    let mut m = ConfusionMatrix::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let mut cells = line.split('\t');
        let row = cells.next().unwrap();
        for (col, cell) in cols.iter().zip(cells) {
            m.add(row, col, cell.parse().unwrap());
        }
    }
    m
}

const WORDS: [&str; 10] = ["great", "service", "the", "staff", "was", "rude", "food", "we", "love", "prices"];
const CATS: [&str; 8] = ["P", "A", "D", "S", "C", "E", "F", "T"];
const REFINEMENTS: [&str; 6] = [
    "deictic",
    "generic",
    "genre-based",
    "type-identifiable",
    "non-specific",
    "iterated-set",
];

/// Random tokens; the last one may be a full stop.
pub fn random_tokens(seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=8);
    let mut tokens: Vec<String> = (0..n).map(|_| WORDS.choose(&mut rng).unwrap().to_string()).collect();
    if n > 1 && rng.gen_bool(0.4) {
        *tokens.last_mut().unwrap() = ".".to_string();
    }
    tokens
}

fn attach(b: &mut GraphBuilder, rng: &mut ChaCha8Rng, parent: NodeId, lo: usize, hi: usize, depth: usize, units: &mut Vec<NodeId>) {
    let len = hi - lo;
    if len == 1 || depth >= 3 || rng.gen_bool(0.3) {
        for t in lo..hi {
            let cat = *CATS.choose(rng).unwrap();
            b.edge(parent, b.terminal(t), cat);
        }
        return;
    }
    let k = rng.gen_range(2..=len.min(3));
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, len - 1, k - 1).into_iter().map(|c| lo + c + 1).collect();
    cuts.sort_unstable();
    let bounds: Vec<usize> = std::iter::once(lo).chain(cuts).chain(std::iter::once(hi)).collect();
    for w in bounds.windows(2) {
        if w[1] - w[0] == 1 && rng.gen_bool(0.5) {
            let cat = *CATS.choose(rng).unwrap();
            b.edge(parent, b.terminal(w[0]), cat);
        } else {
            let unit = b.unit(parent, if depth == 0 { "H" } else { CATS.choose(rng).unwrap() });
            units.push(unit);
            attach(b, rng, unit, w[0], w[1], depth + 1, units);
        }
    }
}

/// A valid random graph. Tokens, unit structure (with remotes) and implicit
/// units come from separate seeds, so two graphs can share any of them.
pub fn random_graph(token_seed: u64, structure_seed: u64, implicit_seed: u64) -> Graph {
    let tokens = random_tokens(token_seed);
    let mut b = GraphBuilder::new(&tokens);
    let root = b.root();
    let mut rng = ChaCha8Rng::seed_from_u64(structure_seed);
    let punct = tokens.last().map(|t| t == ".").unwrap_or(false);
    let words = tokens.len() - usize::from(punct);
    let mut units = Vec::new();
    attach(&mut b, &mut rng, root, 0, words, 0, &mut units);
    if punct {
        b.edge(root, b.terminal(words), "U");
    }
    // remotes from a unit to a word outside it
    if !units.is_empty() && rng.gen_bool(0.3) {
        let u = *units.choose(&mut rng).unwrap();
        let t = rng.gen_range(0..words);
        let g = b.clone().build();
        if g.tree_parent(NodeId(t as u32)).map(|e| e.src) != Some(u) {
            b.remote(u, b.terminal(t), "A");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(implicit_seed);
    for &u in &units {
        if rng.gen_bool(0.35) {
            for _ in 0..rng.gen_range(1..=2) {
                let label = if rng.gen_bool(0.1) {
                    "A".to_string()
                } else {
                    format!("A+{}", REFINEMENTS.choose(&mut rng).unwrap())
                };
                b.implicit(u, &label);
            }
        }
    }
    let g = b.build();
    let violations = validate(&g);
    assert!(violations.is_empty(), "generator produced {violations:?}");
    g
}

pub fn document(id: &str, g: Graph) -> Document {
    let tokens: Vec<_> = g
        .nodes()
        .iter()
        .filter_map(|n| match &n.kind {
            NodeKind::Terminal { anchor, .. } => Some(*anchor),
            _ => None,
        })
        .collect();
    Document {
        id: id.to_string(),
        text: g.terminal_texts().join(" "),
        tokens,
        graph: g,
    }
}

const WALK_LABELS: [&str; 9] = ["H", "A", "P", "D", "C", "U", "A+generic", "A+deictic", "A+genre-based"];

/// Structural invariants every reachable parser state must satisfy.
pub fn check_invariants(st: &ParserState) -> Result<(), String> {
    let n = st.n_nodes();
    let mut seen = vec![false; n];
    for &v in st.stack().iter().chain(st.buffer()) {
        if v.index() >= n {
            return Err(format!("{v} out of range"));
        }
        if std::mem::replace(&mut seen[v.index()], true) {
            return Err(format!("{v} appears twice on stack and buffer"));
        }
    }
    if !st.is_terminal() && st.stack().first() != Some(&st.root()) {
        return Err("root left the stack bottom before finish".into());
    }
    let mut tree_parents = vec![0; n];
    for e in st.edges() {
        if e.src.index() >= n || e.tgt.index() >= n {
            return Err(format!("edge {}->{} out of range", e.src, e.tgt));
        }
        if e.tgt == st.root() {
            return Err("edge into root".into());
        }
        if matches!(st.node(e.src).kind, StateNodeKind::Terminal | StateNodeKind::Implicit) {
            return Err(format!("leaf {} has a child", e.src));
        }
        if st.reaches(e.tgt, e.src) {
            return Err(format!("cycle through {}->{}", e.src, e.tgt));
        }
        if e.attr.is_tree() {
            tree_parents[e.tgt.index()] += 1;
        }
        if e.label.refinement.is_some() && e.attr == EdgeAttr::Remote {
            return Err("refined remote edge".into());
        }
    }
    if let Some(v) = tree_parents.iter().position(|&c| c > 1) {
        return Err(format!("node {v} has {} tree parents", tree_parents[v]));
    }
    Ok(())
}

/// Applies uniformly chosen legal actions until the state is terminal,
/// checking invariants after each step. The final graph must be extractable
/// and repairable into a valid graph.
pub fn random_walk(seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let system = if seed.is_multiple_of(2) {
        SystemKind::ImplicitEager
    } else {
        SystemKind::ImplicitStandard
    };
    let tokens = random_tokens(seed ^ 0x5eed);
    let mut st = ParserState::new(system, &tokens).map_err(|e| e.to_string())?;
    let limit = max_steps(tokens.len());
    while !st.is_terminal() {
        if st.history().len() >= limit {
            st.force_finish();
            break;
        }
        let mut candidates = Vec::new();
        for kind in st.legal_kinds().map_err(|e| e.to_string())? {
            if kind.takes_label() {
                for l in WALK_LABELS {
                    let a = Action::with_label(kind, Some(l.parse().unwrap())).unwrap();
                    if st.check(&a).is_ok() {
                        candidates.push(a);
                    }
                }
            } else {
                candidates.push(Action::with_label(kind, None).unwrap());
            }
        }
        let a = *candidates.choose(&mut rng).ok_or("no legal action")?;
        st.apply(&a).map_err(|e| format!("legal {a} failed: {e}"))?;
        check_invariants(&st).map_err(|e| format!("after {a}: {e}"))?;
    }
    check_invariants(&st)?;
    let g = st.extract_graph().map_err(|e| e.to_string())?;
    let (fixed, _) = repair(g);
    let violations = validate(&fixed);
    if !violations.is_empty() {
        return Err(format!("repair left {violations:?}"));
    }
    Ok(st.history().len())
}
