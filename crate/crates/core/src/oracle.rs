//! Static oracles for both transition systems.
//!
//! The oracle explores gold-consistent actions depth-first in precedence
//! order, backtracking out of dead ends. Most states have a single forced
//! action, so the search rarely branches.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::codec::Document;
use crate::graph::{validate, Edge, EdgeAttr, Graph, NodeId, NodeKind};
use crate::transitions::{Action, ActionKind, ParserState, SystemKind, TransitionError};

pub const DEFAULT_POLICY: &str = "precedence";
const POLICIES: [&str; 1] = [DEFAULT_POLICY];

/// Expansions allowed per search before giving up.
pub const SEARCH_BUDGET: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleConfig {
    pub system: SystemKind,
    pub policy: String,
}

impl OracleConfig {
    pub fn new(system: SystemKind) -> Self {
        OracleConfig {
            system,
            policy: DEFAULT_POLICY.to_string(),
        }
    }

    pub fn with_policy(system: SystemKind, policy: &str) -> Result<Self, OracleError> {
        if !POLICIES.contains(&policy) {
            return Err(OracleError::UnknownPolicy(policy.to_string()));
        }
        Ok(OracleConfig {
            system,
            policy: policy.to_string(),
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("unknown tie-break policy {0:?}")]
    UnknownPolicy(String),
    #[error("gold graph is invalid: {0}")]
    InvalidGold(String),
    #[error("no gold-consistent action sequence from this state\n{0}")]
    Stuck(String),
    #[error("state history is not a gold derivation prefix: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Transition(#[from] TransitionError),
}

/// Gold graph plus adjacency restricted to what the oracle needs.
struct Gold<'a> {
    g: &'a Graph,
    /// Implicit child edges per node, sorted by (label, target).
    implicit_children: Vec<Vec<usize>>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl<'a> Gold<'a> {
    fn new(g: &'a Graph) -> Self {
        let n = g.nodes().len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        let mut implicit_children = vec![Vec::new(); n];
        for (i, e) in g.edges().iter().enumerate() {
            out[e.src.index()].push(i);
            inc[e.tgt.index()].push(i);
            if e.attr == EdgeAttr::Implicit {
                implicit_children[e.src.index()].push(i);
            }
        }
        for list in &mut implicit_children {
            list.sort_by_key(|&i| (g.edges()[i].label, g.edges()[i].tgt));
        }
        Gold {
            g,
            implicit_children,
            out,
            inc,
        }
    }

    fn edge(&self, i: usize) -> &Edge {
        &self.g.edges()[i]
    }

    fn tree_parent(&self, v: NodeId) -> Option<usize> {
        self.inc[v.index()]
            .iter()
            .copied()
            .find(|&i| self.edge(i).attr.is_tree())
    }
}

/// Correspondence between state nodes and gold nodes, plus built gold edges.
#[derive(Clone)]
struct Track {
    align: Vec<Option<NodeId>>,
    rev: Vec<Option<NodeId>>,
    built: Vec<bool>,
}

impl Track {
    fn new(gold: &Gold, st: &ParserState) -> Self {
        let n_gold = gold.g.nodes().len();
        let mut align = vec![None; st.n_nodes()];
        let mut rev = vec![None; n_gold];
        // terminals and root share ids
        for i in 0..=st.n_tokens() {
            align[i] = Some(NodeId(i as u32));
            rev[i] = Some(NodeId(i as u32));
        }
        Track {
            align,
            rev,
            built: vec![false; gold.g.edges().len()],
        }
    }

    fn gold_of(&self, v: NodeId) -> Option<NodeId> {
        self.align.get(v.index()).copied().flatten()
    }

    fn has_remaining(&self, gold: &Gold, g: NodeId) -> bool {
        gold.out[g.index()]
            .iter()
            .chain(&gold.inc[g.index()])
            .any(|&i| !self.built[i])
    }

    fn key(&self, st: &ParserState) -> Vec<u32> {
        let mut key = Vec::with_capacity(8 + st.n_nodes() * 2 + self.built.len() / 32);
        key.extend(st.stack().iter().map(|v| v.0));
        key.push(u32::MAX);
        key.extend(st.buffer().iter().map(|v| v.0));
        key.push(u32::MAX);
        key.extend(self.align.iter().map(|a| a.map(|v| v.0).unwrap_or(u32::MAX)));
        key.push(u32::MAX);
        for chunk in self.built.chunks(32) {
            key.push(chunk.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u32) << i)));
        }
        key
    }
}

/// Which gold node a creation action at this state stands for, and the gold
/// edge it builds (if any).
fn creation_target(gold: &Gold, track: &Track, st: &ParserState) -> Option<(ActionKind, NodeId, usize)> {
    let s0 = st.s(0)?;
    if s0 == st.root() {
        return None;
    }
    let g0 = track.gold_of(s0)?;
    if matches!(gold.g.nodes()[g0.index()].kind, NodeKind::Implicit | NodeKind::Root) {
        return None;
    }
    let primary_done = gold.out[g0.index()]
        .iter()
        .all(|&i| gold.edge(i).attr != EdgeAttr::Primary || track.built[i]);
    if !primary_done {
        return None;
    }
    let pending_implicit = gold.implicit_children[g0.index()]
        .iter()
        .copied()
        .find(|&i| track.rev[gold.edge(i).tgt.index()].is_none());
    let fresh_implicit = st
        .b(0)
        .and_then(|b| track.gold_of(b))
        .is_some_and(|g| gold.g.nodes()[g.index()].kind == NodeKind::Implicit);
    if let Some(i) = pending_implicit {
        if fresh_implicit {
            return None;
        }
        let kind = match st.system() {
            SystemKind::ImplicitEager => ActionKind::Implicit,
            SystemKind::ImplicitStandard => ActionKind::NodeStandard,
        };
        return Some((kind, gold.edge(i).tgt, i));
    }
    let implicit_done = gold.implicit_children[g0.index()].iter().all(|&i| track.built[i]);
    if !implicit_done {
        return None;
    }
    let p = gold.tree_parent(g0)?;
    let parent = gold.edge(p).src;
    if parent == gold.g.root() || track.rev[parent.index()].is_some() {
        return None;
    }
    let kind = match st.system() {
        SystemKind::ImplicitEager => ActionKind::NodeEager,
        SystemKind::ImplicitStandard => ActionKind::NodeStandard,
    };
    Some((kind, parent, p))
}

fn creation_action(gold: &Gold, track: &Track, st: &ParserState) -> Option<Action> {
    let (kind, _, edge) = creation_target(gold, track, st)?;
    Action::with_label(kind, kind.takes_label().then(|| gold.edge(edge).label))
}

/// Unbuilt gold edge from state node `src` to `tgt` with an allowed attribute.
fn unbuilt_edge(gold: &Gold, track: &Track, src: NodeId, tgt: NodeId, attrs: &[EdgeAttr]) -> Option<usize> {
    let (gs, gt) = (track.gold_of(src)?, track.gold_of(tgt)?);
    gold.out[gs.index()].iter().copied().find(|&i| {
        let e = gold.edge(i);
        e.tgt == gt && !track.built[i] && attrs.contains(&e.attr)
    })
}

fn tree_attrs(system: SystemKind) -> &'static [EdgeAttr] {
    match system {
        SystemKind::ImplicitEager => &[EdgeAttr::Primary],
        SystemKind::ImplicitStandard => &[EdgeAttr::Primary, EdgeAttr::Implicit],
    }
}

/// Applies `action` and updates the bookkeeping. Fails when the action is
/// illegal or does not correspond to an unbuilt gold edge.
fn advance(gold: &Gold, st: &mut ParserState, track: &mut Track, action: &Action) -> Result<(), OracleError> {
    let creation = match action.kind() {
        ActionKind::Implicit | ActionKind::NodeEager | ActionKind::NodeStandard => {
            let target = creation_target(gold, track, st)
                .filter(|(k, _, e)| *k == action.kind() && action.label().is_none_or(|l| l == gold.edge(*e).label))
                .ok_or_else(|| OracleError::Inconsistent(format!("{action} creates no gold node")))?;
            Some(target)
        }
        _ => None,
    };
    let built_edge = match *action {
        Action::LeftEdge(l) | Action::RightEdge(l) | Action::LeftRemote(l) | Action::RightRemote(l) => {
            let (a, b) = (st.s(0), st.s(1));
            let (Some(a), Some(b)) = (a, b) else {
                return Err(OracleError::Inconsistent(format!("{action} without two stack items")));
            };
            let (src, tgt) = match action.kind() {
                ActionKind::LeftEdge | ActionKind::LeftRemote => (a, b),
                _ => (b, a),
            };
            let attrs: &[EdgeAttr] = match action.kind() {
                ActionKind::LeftRemote | ActionKind::RightRemote => &[EdgeAttr::Remote],
                _ => tree_attrs(st.system()),
            };
            let i = unbuilt_edge(gold, track, src, tgt, attrs)
                .filter(|&i| gold.edge(i).label == l)
                .ok_or_else(|| OracleError::Inconsistent(format!("{action} builds no gold edge")))?;
            Some(i)
        }
        _ => None,
    };
    st.apply(action)?;
    track.align.resize(st.n_nodes(), None);
    if let Some((kind, target, edge)) = creation {
        let new = NodeId(st.n_nodes() as u32 - 1);
        track.align[new.index()] = Some(target);
        track.rev[target.index()] = Some(new);
        if kind != ActionKind::NodeStandard {
            track.built[edge] = true;
        }
    }
    if let Some(i) = built_edge {
        track.built[i] = true;
    }
    Ok(())
}

/// True when s0 still needs an edge with a node below s1 on the stack.
fn swap_needed(gold: &Gold, track: &Track, st: &ParserState) -> bool {
    let stack = st.stack();
    if stack.len() < 3 {
        return false;
    }
    let Some(g0) = st.s(0).and_then(|v| track.gold_of(v)) else {
        return false;
    };
    let deep: HashSet<NodeId> = stack[..stack.len() - 2]
        .iter()
        .filter_map(|&v| track.gold_of(v))
        .collect();
    gold.out[g0.index()]
        .iter()
        .map(|&i| (i, gold.edge(i).tgt))
        .chain(gold.inc[g0.index()].iter().map(|&i| (i, gold.edge(i).src)))
        .any(|(i, other)| !track.built[i] && deep.contains(&other))
}

struct Search<'a> {
    gold: Gold<'a>,
    failed: HashSet<Vec<u32>>,
    expansions: usize,
    path: Vec<Action>,
}

enum Outcome {
    Found,
    DeadEnd,
    OutOfBudget,
}

impl<'a> Search<'a> {
    /// Gold-consistent actions in the order they are tried. A single-element
    /// list means the action is forced.
    fn candidates(&self, st: &ParserState, track: &Track) -> Vec<Action> {
        let gold = &self.gold;
        let legal = |a: &Action| st.check(a).is_ok();
        if st.stack() == [st.root()] && st.buffer().is_empty() {
            return if track.built.iter().all(|&b| b) {
                vec![Action::Finish]
            } else {
                Vec::new()
            };
        }
        if let (Some(s0), Some(s1)) = (st.s(0), st.s(1)) {
            let attrs = tree_attrs(st.system());
            let forced = [
                unbuilt_edge(gold, track, s0, s1, attrs).map(|i| Action::LeftEdge(gold.edge(i).label)),
                unbuilt_edge(gold, track, s1, s0, attrs).map(|i| Action::RightEdge(gold.edge(i).label)),
                unbuilt_edge(gold, track, s0, s1, &[EdgeAttr::Remote]).map(|i| Action::LeftRemote(gold.edge(i).label)),
                unbuilt_edge(gold, track, s1, s0, &[EdgeAttr::Remote]).map(|i| Action::RightRemote(gold.edge(i).label)),
            ];
            if let Some(a) = forced.into_iter().flatten().find(legal) {
                return vec![a];
            }
        }
        let creation = creation_action(gold, track, st).filter(legal);
        if let Some(a @ Action::Implicit(_)) = creation {
            return vec![a];
        }
        if let Some(s0) = st.s(0) {
            let complete = track.gold_of(s0).is_some_and(|g| !track.has_remaining(gold, g));
            if complete && legal(&Action::Reduce) {
                return vec![Action::Reduce];
            }
        }
        let mut out = Vec::with_capacity(4);
        out.extend(creation);
        let swap_ok = legal(&Action::Swap);
        let swap_first = swap_ok && swap_needed(gold, track, st);
        if swap_first {
            out.push(Action::Swap);
        }
        if legal(&Action::Shift) {
            out.push(Action::Shift);
        }
        if swap_ok && !swap_first {
            out.push(Action::Swap);
        }
        out
    }

    fn run(&mut self, st: &ParserState, track: &Track) -> Outcome {
        if st.is_terminal() {
            return Outcome::Found;
        }
        let key = track.key(st);
        if self.failed.contains(&key) {
            return Outcome::DeadEnd;
        }
        self.expansions += 1;
        if self.expansions > SEARCH_BUDGET {
            return Outcome::OutOfBudget;
        }
        for action in self.candidates(st, track) {
            let (mut next, mut next_track) = (st.clone(), track.clone());
            if advance(&self.gold, &mut next, &mut next_track, &action).is_err() {
                continue;
            }
            self.path.push(action);
            match self.run(&next, &next_track) {
                Outcome::Found => return Outcome::Found,
                Outcome::OutOfBudget => return Outcome::OutOfBudget,
                Outcome::DeadEnd => {
                    self.path.pop();
                }
            }
        }
        self.failed.insert(key);
        Outcome::DeadEnd
    }
}

fn check_gold(gold: &Graph) -> Result<(), OracleError> {
    match validate(gold).first() {
        Some(v) => Err(OracleError::InvalidGold(v.to_string())),
        None => Ok(()),
    }
}

/// Human-readable state summary for stuck reports.
pub fn dump_state(st: &ParserState) -> String {
    let show = |v: &NodeId| match st.form(*v) {
        Some(f) => format!("{v}:{f}"),
        None if *v == st.root() => format!("{v}:ROOT"),
        None => format!("{v}"),
    };
    let mut out = String::new();
    let stack: Vec<_> = st.stack().iter().map(show).collect();
    let buffer: Vec<_> = st.buffer().iter().map(show).collect();
    let _ = writeln!(out, "system: {}", st.system());
    let _ = writeln!(out, "stack: [{}]", stack.join(", "));
    let _ = writeln!(out, "buffer: [{}]", buffer.join(", "));
    let _ = writeln!(out, "nodes: {}", st.n_nodes());
    for e in st.edges() {
        let _ = writeln!(out, "edge: {} -> {} {} ({})", e.src, e.tgt, e.label, e.attr.wire());
    }
    let _ = write!(out, "history: {}", st.history().iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" | "));
    out
}

fn search_from(gold: &Graph, st: &ParserState, track: Track) -> Result<Vec<Action>, OracleError> {
    let mut search = Search {
        gold: Gold::new(gold),
        failed: HashSet::new(),
        expansions: 0,
        path: Vec::new(),
    };
    match search.run(st, &track) {
        Outcome::Found => Ok(search.path),
        Outcome::DeadEnd => Err(OracleError::Stuck(dump_state(st))),
        Outcome::OutOfBudget => Err(OracleError::Stuck(format!(
            "search budget of {SEARCH_BUDGET} expansions exhausted\n{}",
            dump_state(st)
        ))),
    }
}

/// Replays the state's history against the gold graph to recover the
/// node alignment.
fn replay(gold: &Gold, st: &ParserState) -> Result<Track, OracleError> {
    let mut fresh = ParserState::for_graph(st.system(), gold.g)?;
    let mut track = Track::new(gold, &fresh);
    for a in st.history() {
        advance(gold, &mut fresh, &mut track, a)?;
    }
    Ok(track)
}

/// The next gold action from a state reached by a gold derivation prefix.
pub fn oracle_next(st: &ParserState, gold: &Graph, cfg: &OracleConfig) -> Result<Action, OracleError> {
    if st.is_terminal() {
        return Err(TransitionError::Terminal.into());
    }
    if st.system() != cfg.system {
        return Err(OracleError::Inconsistent(format!(
            "state uses the {} system but the oracle is configured for {}",
            st.system(),
            cfg.system
        )));
    }
    check_gold(gold)?;
    let track = replay(&Gold::new(gold), st)?;
    let path = search_from(gold, st, track)?;
    Ok(path[0])
}

/// Complete gold action sequence from the initial state.
pub fn oracle_sequence(gold: &Graph, cfg: &OracleConfig) -> Result<Vec<Action>, OracleError> {
    check_gold(gold)?;
    let st = ParserState::for_graph(cfg.system, gold)?;
    let track = Track::new(&Gold::new(gold), &st);
    search_from(gold, &st, track)
}

/// Applies a sequence to a fresh state over the graph's tokens.
pub fn replay_sequence(gold: &Graph, system: SystemKind, actions: &[Action]) -> Result<ParserState, TransitionError> {
    let mut st = ParserState::for_graph(system, gold)?;
    for a in actions {
        st.apply(a)?;
    }
    Ok(st)
}

/// Canonical structural description of a graph: node ids are replaced by a
/// signature of the primary subtree below each node.
pub fn canonical_form(g: &Graph) -> Vec<String> {
    fn sig(g: &Graph, v: NodeId, memo: &mut Vec<Option<String>>, active: &mut Vec<bool>) -> String {
        if let Some(s) = &memo[v.index()] {
            return s.clone();
        }
        if active[v.index()] {
            return "cycle".to_string();
        }
        active[v.index()] = true;
        let s = match &g.nodes()[v.index()].kind {
            NodeKind::Terminal { text, .. } => format!("t{}:{text}", v.index()),
            NodeKind::Implicit => "imp".to_string(),
            kind => {
                let mut parts: Vec<String> = g
                    .outgoing(v)
                    .filter(|e| e.attr.is_tree())
                    .map(|e| format!("{}/{}:{}", e.label.trace_form(), e.attr.wire(), sig(g, e.tgt, memo, active)))
                    .collect();
                parts.sort();
                format!("{}({})", kind.wire(), parts.join(" "))
            }
        };
        active[v.index()] = false;
        memo[v.index()] = Some(s.clone());
        s
    }
    let n = g.nodes().len();
    let mut memo = vec![None; n];
    let mut active = vec![false; n];
    let mut out: Vec<String> = (0..n)
        .map(|i| format!("node {}", sig(g, NodeId(i as u32), &mut memo, &mut active)))
        .collect();
    for e in g.edges() {
        out.push(format!(
            "edge {} -> {} {} {}",
            sig(g, e.src, &mut memo, &mut active),
            sig(g, e.tgt, &mut memo, &mut active),
            e.label.trace_form(),
            e.attr.wire()
        ));
    }
    out.sort();
    out
}

/// Equality up to renaming of non-terminal and implicit node ids.
pub fn graphs_equivalent(a: &Graph, b: &Graph) -> bool {
    a.n_terminals() == b.n_terminals() && canonical_form(a) == canonical_form(b)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RoundTrip {
    Equal { actions: usize },
    Unequal { actions: usize },
    Stuck { reason: String },
    Invalid { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripEntry {
    pub id: String,
    #[serde(flatten)]
    pub result: RoundTrip,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripReport {
    pub system: String,
    pub entries: Vec<RoundTripEntry>,
}

impl RoundTripReport {
    pub fn equal(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e.result, RoundTrip::Equal { .. }))
            .count()
    }

    /// Percentage of documents reproduced exactly; 100 for an empty corpus.
    pub fn coverage(&self) -> f64 {
        if self.entries.is_empty() {
            100.0
        } else {
            100.0 * self.equal() as f64 / self.entries.len() as f64
        }
    }
}

impl fmt::Display for RoundTripReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            match &e.result {
                RoundTrip::Equal { actions } => writeln!(f, "{}\tequal\t{actions} actions", e.id)?,
                RoundTrip::Unequal { actions } => writeln!(f, "{}\tunequal\t{actions} actions", e.id)?,
                RoundTrip::Stuck { reason } => {
                    writeln!(f, "{}\tstuck\t{}", e.id, reason.lines().next().unwrap_or(""))?
                }
                RoundTrip::Invalid { reason } => writeln!(f, "{}\tinvalid\t{reason}", e.id)?,
            }
        }
        write!(
            f,
            "{}: {}/{} documents, {:.1}% round-trip",
            self.system,
            self.equal(),
            self.entries.len(),
            self.coverage()
        )
    }
}

pub fn roundtrip_one(gold: &Graph, cfg: &OracleConfig) -> RoundTrip {
    if let Err(e) = check_gold(gold) {
        return RoundTrip::Invalid { reason: e.to_string() };
    }
    let actions = match oracle_sequence(gold, cfg) {
        Ok(a) => a,
        Err(e) => return RoundTrip::Stuck { reason: e.to_string() },
    };
    let n = actions.len();
    match replay_sequence(gold, cfg.system, &actions).and_then(|st| st.extract_graph()) {
        Ok(g) if graphs_equivalent(&g, gold) => RoundTrip::Equal { actions: n },
        Ok(_) => RoundTrip::Unequal { actions: n },
        Err(e) => RoundTrip::Stuck { reason: e.to_string() },
    }
}

/// Runs the oracle on every document and checks the extracted graphs.
pub fn verify_roundtrip(corpus: &[Document], cfg: &OracleConfig) -> RoundTripReport {
    let entries = corpus
        .par_iter()
        .map(|doc| RoundTripEntry {
            id: doc.id.clone(),
            result: roundtrip_one(&doc.graph, cfg),
        })
        .collect();
    RoundTripReport {
        system: cfg.system.to_string(),
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    const BOTH: [SystemKind; 2] = [SystemKind::ImplicitEager, SystemKind::ImplicitStandard];

    fn roundtrip(g: &Graph, system: SystemKind) -> Vec<Action> {
        let cfg = OracleConfig::new(system);
        let actions = oracle_sequence(g, &cfg).unwrap();
        let out = replay_sequence(g, system, &actions).unwrap().extract_graph().unwrap();
        assert!(graphs_equivalent(&out, g), "{system}: {:?}", canonical_form(&out));
        actions
    }

    #[test]
    fn single_token() {
        let mut b = GraphBuilder::new(&["Hi"]);
        let root = b.root();
        b.edge(root, NodeId(0), "H");
        let g = b.build();
        for sys in BOTH {
            let actions = roundtrip(&g, sys);
            assert_eq!(format_actions(&actions), "SHIFT RIGHT-EDGE H REDUCE FINISH");
        }
    }

    fn format_actions(actions: &[Action]) -> String {
        actions.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
    }

    fn scene_with_implicits() -> Graph {
        let mut b = GraphBuilder::new(&["service", "rocks", "."]);
        let root = b.root();
        let scene = b.unit(root, "H");
        b.edge(scene, NodeId(0), "A");
        b.edge(scene, NodeId(1), "P");
        b.implicit(scene, "A+genre-based");
        b.implicit(scene, "A+generic");
        b.edge(root, NodeId(2), "U");
        b.build()
    }

    #[test]
    fn implicit_counts_per_system() {
        let g = scene_with_implicits();
        let eager = roundtrip(&g, SystemKind::ImplicitEager);
        let implicit: Vec<_> = eager.iter().filter(|a| a.kind() == ActionKind::Implicit).collect();
        assert_eq!(implicit.len(), 2);
        assert_eq!(implicit[0].to_string(), "IMPLICIT A+generic");
        let standard = roundtrip(&g, SystemKind::ImplicitStandard);
        assert!(standard.iter().all(|a| a.kind() != ActionKind::Implicit));
        // one scene node plus two implicit nodes
        assert_eq!(standard.iter().filter(|a| **a == Action::NodeStandard).count(), 3);
    }

    #[test]
    fn standard_attaches_implicit_with_right_edge() {
        let g = scene_with_implicits();
        let standard = format_actions(&roundtrip(&g, SystemKind::ImplicitStandard));
        assert!(standard.contains("NODE SHIFT RIGHT-EDGE A+generic REDUCE"), "{standard}");
    }

    #[test]
    fn discontinuous_unit_needs_swap() {
        // [give up] discontinuous around "it"
        let mut b = GraphBuilder::new(&["give", "it", "up"]);
        let root = b.root();
        let scene = b.unit(root, "H");
        let p = b.unit(scene, "P");
        b.edge(p, NodeId(0), "C");
        b.edge(p, NodeId(2), "C");
        b.edge(scene, NodeId(1), "A");
        let g = b.build();
        for sys in BOTH {
            let actions = roundtrip(&g, sys);
            assert!(actions.contains(&Action::Swap), "{sys}: {}", format_actions(&actions));
        }
    }

    #[test]
    fn remote_edges_roundtrip() {
        let mut b = GraphBuilder::new(&["you", "leave", "and", "go"]);
        let root = b.root();
        let s1 = b.unit(root, "H");
        b.edge(s1, NodeId(0), "A");
        b.edge(s1, NodeId(1), "P");
        b.edge(root, NodeId(2), "L");
        let s2 = b.unit(root, "H");
        b.edge(s2, NodeId(3), "P");
        b.remote(s2, NodeId(0), "A");
        let g = b.build();
        for sys in BOTH {
            let actions = roundtrip(&g, sys);
            assert!(actions.iter().any(|a| matches!(a.kind(), ActionKind::LeftRemote | ActionKind::RightRemote)));
        }
    }

    #[test]
    fn oracle_next_follows_sequence() {
        let g = scene_with_implicits();
        for sys in BOTH {
            let cfg = OracleConfig::new(sys);
            let full = oracle_sequence(&g, &cfg).unwrap();
            let mut st = ParserState::for_graph(sys, &g).unwrap();
            for expected in &full {
                let next = oracle_next(&st, &g, &cfg).unwrap();
                assert_eq!(&next, expected);
                assert!(st.legal_kinds().unwrap().contains(&next.kind()));
                st.apply(&next).unwrap();
            }
            assert!(oracle_next(&st, &g, &cfg).is_err());
        }
    }

    #[test]
    fn inconsistent_history_is_rejected() {
        let g = scene_with_implicits();
        let cfg = OracleConfig::new(SystemKind::ImplicitEager);
        let mut st = ParserState::for_graph(SystemKind::ImplicitEager, &g).unwrap();
        st.apply(&Action::Shift).unwrap();
        st.apply(&Action::RightEdge("D".parse().unwrap())).unwrap();
        assert!(matches!(oracle_next(&st, &g, &cfg), Err(OracleError::Inconsistent(_))));
    }

    #[test]
    fn deterministic_traces() {
        let g = scene_with_implicits();
        let cfg = OracleConfig::new(SystemKind::ImplicitEager);
        assert_eq!(oracle_sequence(&g, &cfg).unwrap(), oracle_sequence(&g, &cfg).unwrap());
    }

    #[test]
    fn unknown_policy() {
        assert!(OracleConfig::with_policy(SystemKind::ImplicitEager, "random").is_err());
        assert!(OracleConfig::with_policy(SystemKind::ImplicitEager, DEFAULT_POLICY).is_ok());
    }

    #[test]
    fn empty_corpus_report() {
        let r = verify_roundtrip(&[], &OracleConfig::new(SystemKind::ImplicitEager));
        assert!(r.entries.is_empty());
        assert_eq!(r.coverage(), 100.0);
    }

    #[test]
    fn equivalence_ignores_ids() {
        let a = scene_with_implicits();
        let mut b = GraphBuilder::new(&["service", "rocks", "."]);
        let root = b.root();
        b.edge(root, NodeId(2), "U");
        let scene = b.unit(root, "H");
        b.implicit(scene, "A+generic");
        b.edge(scene, NodeId(1), "P");
        b.implicit(scene, "A+genre-based");
        b.edge(scene, NodeId(0), "A");
        let b = b.build();
        assert!(graphs_equivalent(&a, &b));
        let mut c = GraphBuilder::new(&["service", "rocks", "."]);
        let root = c.root();
        let scene = c.unit(root, "H");
        c.edge(scene, NodeId(0), "A");
        c.edge(scene, NodeId(1), "P");
        c.implicit(scene, "A+generic");
        c.implicit(scene, "A+generic");
        c.edge(root, NodeId(2), "U");
        assert!(!graphs_equivalent(&a, &c.build()));
    }
}
