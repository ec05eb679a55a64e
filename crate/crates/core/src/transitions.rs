//! Parser configurations and the Implicit-Eager / Implicit-Standard
//! transition systems.
//!
//! The stack is written with its top to the right, the buffer with its head
//! to the left. `s0`/`s1` are the top two stack items, `b0` the buffer head.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Category, Edge, EdgeAttr, EdgeLabel, Graph, Node, NodeId, NodeKind, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    ImplicitEager,
    ImplicitStandard,
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::ImplicitEager => "eager",
            SystemKind::ImplicitStandard => "standard",
        })
    }
}

impl FromStr for SystemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eager" | "implicit-eager" => Ok(SystemKind::ImplicitEager),
            "standard" | "implicit-standard" => Ok(SystemKind::ImplicitStandard),
            _ => Err(format!("unknown transition system {s:?} (expected eager or standard)")),
        }
    }
}

/// Action kinds with labels abstracted away. Declaration order is the
/// precedence used for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    Finish,
    LeftEdge,
    RightEdge,
    LeftRemote,
    RightRemote,
    Implicit,
    NodeEager,
    NodeStandard,
    Reduce,
    Swap,
    Shift,
}

impl ActionKind {
    pub const ALL: [ActionKind; 11] = [
        ActionKind::Finish,
        ActionKind::LeftEdge,
        ActionKind::RightEdge,
        ActionKind::LeftRemote,
        ActionKind::RightRemote,
        ActionKind::Implicit,
        ActionKind::NodeEager,
        ActionKind::NodeStandard,
        ActionKind::Reduce,
        ActionKind::Swap,
        ActionKind::Shift,
    ];

    pub fn takes_label(self) -> bool {
        matches!(
            self,
            ActionKind::LeftEdge
                | ActionKind::RightEdge
                | ActionKind::LeftRemote
                | ActionKind::RightRemote
                | ActionKind::Implicit
                | ActionKind::NodeEager
        )
    }

    /// Whether the kind belongs to the given system.
    pub fn in_system(self, system: SystemKind) -> bool {
        match self {
            ActionKind::Implicit | ActionKind::NodeEager => system == SystemKind::ImplicitEager,
            ActionKind::NodeStandard => system == SystemKind::ImplicitStandard,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Shift,
    Reduce,
    /// Creates a parent of s0 on the buffer, attached with the label.
    NodeEager(EdgeLabel),
    /// Creates an unattached node on the buffer.
    NodeStandard,
    /// Creates an implicit child of s0 on the buffer.
    Implicit(EdgeLabel),
    /// Primary edge s0 -> s1.
    LeftEdge(EdgeLabel),
    /// Primary edge s1 -> s0.
    RightEdge(EdgeLabel),
    LeftRemote(EdgeLabel),
    RightRemote(EdgeLabel),
    Swap,
    Finish,
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Shift => ActionKind::Shift,
            Action::Reduce => ActionKind::Reduce,
            Action::NodeEager(_) => ActionKind::NodeEager,
            Action::NodeStandard => ActionKind::NodeStandard,
            Action::Implicit(_) => ActionKind::Implicit,
            Action::LeftEdge(_) => ActionKind::LeftEdge,
            Action::RightEdge(_) => ActionKind::RightEdge,
            Action::LeftRemote(_) => ActionKind::LeftRemote,
            Action::RightRemote(_) => ActionKind::RightRemote,
            Action::Swap => ActionKind::Swap,
            Action::Finish => ActionKind::Finish,
        }
    }

    pub fn label(&self) -> Option<EdgeLabel> {
        match *self {
            Action::NodeEager(l)
            | Action::Implicit(l)
            | Action::LeftEdge(l)
            | Action::RightEdge(l)
            | Action::LeftRemote(l)
            | Action::RightRemote(l) => Some(l),
            _ => None,
        }
    }

    pub fn with_label(kind: ActionKind, label: Option<EdgeLabel>) -> Option<Action> {
        Some(match (kind, label) {
            (ActionKind::Shift, None) => Action::Shift,
            (ActionKind::Reduce, None) => Action::Reduce,
            (ActionKind::NodeStandard, None) => Action::NodeStandard,
            (ActionKind::Swap, None) => Action::Swap,
            (ActionKind::Finish, None) => Action::Finish,
            (ActionKind::NodeEager, Some(l)) => Action::NodeEager(l),
            (ActionKind::Implicit, Some(l)) => Action::Implicit(l),
            (ActionKind::LeftEdge, Some(l)) => Action::LeftEdge(l),
            (ActionKind::RightEdge, Some(l)) => Action::RightEdge(l),
            (ActionKind::LeftRemote, Some(l)) => Action::LeftRemote(l),
            (ActionKind::RightRemote, Some(l)) => Action::RightRemote(l),
            _ => return None,
        })
    }

    fn keyword(&self) -> &'static str {
        match self {
            Action::Shift => "SHIFT",
            Action::Reduce => "REDUCE",
            Action::NodeEager(_) | Action::NodeStandard => "NODE",
            Action::Implicit(_) => "IMPLICIT",
            Action::LeftEdge(_) => "LEFT-EDGE",
            Action::RightEdge(_) => "RIGHT-EDGE",
            Action::LeftRemote(_) => "LEFT-REMOTE",
            Action::RightRemote(_) => "RIGHT-REMOTE",
            Action::Swap => "SWAP",
            Action::Finish => "FINISH",
        }
    }
}

/// Trace line form: `SHIFT`, `IMPLICIT A+genre-based`, `RIGHT-EDGE P`.
impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label() {
            Some(l) => write!(f, "{} {}", self.keyword(), l.trace_form()),
            None => f.write_str(self.keyword()),
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let mut parts = line.split_whitespace();
        let keyword = parts.next().ok_or("empty action line")?;
        let label = match parts.next() {
            Some(l) => Some(l.parse::<EdgeLabel>().map_err(|e| e.to_string())?),
            None => None,
        };
        if parts.next().is_some() {
            return Err(format!("trailing input in {line:?}"));
        }
        let kind = match (keyword, label.is_some()) {
            ("SHIFT", _) => ActionKind::Shift,
            ("REDUCE", _) => ActionKind::Reduce,
            ("NODE", true) => ActionKind::NodeEager,
            ("NODE", false) => ActionKind::NodeStandard,
            ("IMPLICIT", _) => ActionKind::Implicit,
            ("LEFT-EDGE", _) => ActionKind::LeftEdge,
            ("RIGHT-EDGE", _) => ActionKind::RightEdge,
            ("LEFT-REMOTE", _) => ActionKind::LeftRemote,
            ("RIGHT-REMOTE", _) => ActionKind::RightRemote,
            ("SWAP", _) => ActionKind::Swap,
            ("FINISH", _) => ActionKind::Finish,
            _ => return Err(format!("unknown action {keyword:?}")),
        };
        Action::with_label(kind, label).ok_or_else(|| format!("bad label arity in {line:?}"))
    }
}

pub fn format_trace(actions: &[Action]) -> String {
    let mut out = String::new();
    for a in actions {
        out.push_str(&a.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<Action>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransitionError {
    #[error("cannot parse an empty token list")]
    NoTokens,
    #[error("state is terminal")]
    Terminal,
    #[error("state is not terminal")]
    NotTerminal,
    #[error("illegal action {action}: {reason}")]
    Illegal { action: String, reason: &'static str },
}

/// Upper bound on decoding steps before the termination guard fires.
pub fn max_steps(n_tokens: usize) -> usize {
    20 * n_tokens + 40
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateNodeKind {
    Terminal,
    Root,
    /// Made by NodeEager or NodeStandard.
    Created,
    /// Made by Implicit.
    Implicit,
}

#[derive(Debug, Clone)]
pub struct StateNode {
    pub kind: StateNodeKind,
    tree_parent: Option<usize>,
    out: Vec<usize>,
    inc: Vec<usize>,
    /// Standard system: attached by a refined label, so it must stay a leaf.
    committed_implicit: bool,
}

impl StateNode {
    fn new(kind: StateNodeKind) -> Self {
        StateNode {
            kind,
            tree_parent: None,
            out: Vec::new(),
            inc: Vec::new(),
            committed_implicit: false,
        }
    }

    fn is_leaf_only(&self) -> bool {
        matches!(self.kind, StateNodeKind::Terminal | StateNodeKind::Implicit) || self.committed_implicit
    }
}

/// Stack, buffer, nodes, edges and the terminal flag.
#[derive(Debug, Clone)]
pub struct ParserState {
    system: SystemKind,
    terminals: Vec<Node>,
    stack: Vec<NodeId>,
    buffer: VecDeque<NodeId>,
    nodes: Vec<StateNode>,
    edges: Vec<Edge>,
    terminal: bool,
    history: Vec<Action>,
    orphaned: usize,
}

impl ParserState {
    /// Root on the stack, all tokens in the buffer. Anchors assume tokens
    /// separated by single spaces.
    pub fn new<S: AsRef<str>>(system: SystemKind, tokens: &[S]) -> Result<Self, TransitionError> {
        let mut offset = 0;
        let terminals = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let text = t.as_ref().to_string();
                let len = text.chars().count();
                let anchor = Span {
                    from: offset,
                    to: offset + len,
                };
                offset += len + 1;
                Node {
                    id: NodeId(i as u32),
                    kind: NodeKind::Terminal { text, anchor },
                }
            })
            .collect();
        Self::with_terminals(system, terminals)
    }

    /// Initial state over the terminals of an existing graph (keeps anchors).
    pub fn for_graph(system: SystemKind, g: &Graph) -> Result<Self, TransitionError> {
        Self::with_terminals(system, g.nodes()[..g.n_terminals()].to_vec())
    }

    fn with_terminals(system: SystemKind, terminals: Vec<Node>) -> Result<Self, TransitionError> {
        let n = terminals.len();
        if n == 0 {
            return Err(TransitionError::NoTokens);
        }
        let mut nodes: Vec<StateNode> = (0..n).map(|_| StateNode::new(StateNodeKind::Terminal)).collect();
        nodes.push(StateNode::new(StateNodeKind::Root));
        Ok(ParserState {
            system,
            terminals,
            stack: vec![NodeId(n as u32)],
            buffer: (0..n as u32).map(NodeId).collect(),
            nodes,
            edges: Vec::new(),
            terminal: false,
            history: Vec::new(),
            orphaned: 0,
        })
    }

    pub fn system(&self) -> SystemKind {
        self.system
    }

    pub fn n_tokens(&self) -> usize {
        self.terminals.len()
    }

    pub fn root(&self) -> NodeId {
        NodeId(self.terminals.len() as u32)
    }

    pub fn stack(&self) -> &[NodeId] {
        &self.stack
    }

    pub fn buffer(&self) -> &VecDeque<NodeId> {
        &self.buffer
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn history(&self) -> &[Action] {
        &self.history
    }

    /// Nodes reduced while still lacking a primary parent.
    pub fn orphaned(&self) -> usize {
        self.orphaned
    }

    pub fn node(&self, id: NodeId) -> &StateNode {
        &self.nodes[id.index()]
    }

    /// Token text for terminals, `None` otherwise.
    pub fn form(&self, id: NodeId) -> Option<&str> {
        match self.terminals.get(id.index()).map(|n| &n.kind) {
            Some(NodeKind::Terminal { text, .. }) => Some(text),
            _ => None,
        }
    }

    /// Stack item `i` from the top (0 = s0).
    pub fn s(&self, i: usize) -> Option<NodeId> {
        self.stack.len().checked_sub(i + 1).map(|k| self.stack[k])
    }

    /// Buffer item `i` from the head.
    pub fn b(&self, i: usize) -> Option<NodeId> {
        self.buffer.get(i).copied()
    }

    pub fn tree_parent_edge(&self, id: NodeId) -> Option<&Edge> {
        self.nodes[id.index()].tree_parent.map(|i| &self.edges[i])
    }

    pub fn outgoing(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.nodes[id.index()].out.iter().map(move |&i| &self.edges[i])
    }

    pub fn incoming(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.nodes[id.index()].inc.iter().map(move |&i| &self.edges[i])
    }

    fn has_edge(&self, src: NodeId, tgt: NodeId) -> bool {
        self.outgoing(src).any(|e| e.tgt == tgt)
    }

    /// True when `to` is reachable from `from` along existing edges.
    pub fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut todo = vec![from];
        while let Some(x) = todo.pop() {
            if x == to {
                return true;
            }
            if std::mem::replace(&mut seen[x.index()], true) {
                continue;
            }
            todo.extend(self.outgoing(x).map(|e| e.tgt));
        }
        false
    }

    fn is_punctuation(&self, id: NodeId) -> bool {
        self.nodes[id.index()].kind == StateNodeKind::Terminal
            && self
                .tree_parent_edge(id)
                .map(|e| e.label.category == Category::U)
                .unwrap_or(false)
    }

    fn edge_blocker(&self, parent: NodeId, child: NodeId) -> Option<&'static str> {
        let p = &self.nodes[parent.index()];
        let c = &self.nodes[child.index()];
        if p.is_leaf_only() {
            Some("prospective parent is a terminal or implicit node")
        } else if child == self.root() {
            Some("root cannot be a child")
        } else if c.tree_parent.is_some() {
            Some("prospective child already has a primary parent")
        } else if self.has_edge(parent, child) {
            Some("edge already exists")
        } else if self.reaches(child, parent) {
            Some("edge would create a cycle")
        } else {
            None
        }
    }

    fn remote_blocker(&self, parent: NodeId, child: NodeId) -> Option<&'static str> {
        let p = &self.nodes[parent.index()];
        let c = &self.nodes[child.index()];
        if p.is_leaf_only() {
            Some("prospective parent is a terminal or implicit node")
        } else if child == self.root() {
            Some("root cannot be a child")
        } else if c.kind == StateNodeKind::Implicit || c.committed_implicit {
            Some("remote edges cannot target implicit nodes")
        } else if self.is_punctuation(child) {
            Some("remote edges cannot target punctuation")
        } else if self.has_edge(parent, child) || self.has_edge(child, parent) {
            Some("edge already exists")
        } else if self.reaches(child, parent) {
            Some("edge would create a cycle")
        } else {
            None
        }
    }

    /// Structural precondition failure for a kind, ignoring labels.
    fn kind_blocker(&self, kind: ActionKind) -> Option<&'static str> {
        if !kind.in_system(self.system) {
            return Some("action does not belong to this transition system");
        }
        let root = self.root();
        let s0 = self.s(0);
        let s1 = self.s(1);
        match kind {
            ActionKind::Shift => self.buffer.is_empty().then_some("buffer is empty"),
            ActionKind::Reduce => match s0 {
                Some(x) if x != root => None,
                _ => Some("s0 is the root"),
            },
            ActionKind::NodeEager => match s0 {
                Some(x) if x == root => Some("s0 is the root"),
                Some(x) if self.nodes[x.index()].kind == StateNodeKind::Implicit => {
                    Some("s0 is an implicit node")
                }
                Some(x) if self.nodes[x.index()].tree_parent.is_some() => {
                    Some("s0 already has a primary parent")
                }
                Some(_) => None,
                None => Some("stack is empty"),
            },
            ActionKind::NodeStandard => match s0 {
                Some(x) if x == root => Some("s0 is the root"),
                Some(x) => {
                    let n = &self.nodes[x.index()];
                    if n.committed_implicit {
                        Some("s0 is committed to be implicit")
                    } else if n.kind == StateNodeKind::Terminal && n.tree_parent.is_some() {
                        Some("s0 is an attached terminal")
                    } else {
                        None
                    }
                }
                None => Some("stack is empty"),
            },
            ActionKind::Implicit => match s0 {
                Some(x) if x == root => Some("s0 is the root"),
                Some(x) if self.nodes[x.index()].kind != StateNodeKind::Created => {
                    Some("only non-terminal nodes take implicit children")
                }
                Some(_) => None,
                None => Some("stack is empty"),
            },
            ActionKind::LeftEdge | ActionKind::RightEdge | ActionKind::LeftRemote | ActionKind::RightRemote => {
                let (Some(a), Some(b)) = (s0, s1) else {
                    return Some("fewer than two stack items");
                };
                match kind {
                    ActionKind::LeftEdge => self.edge_blocker(a, b),
                    ActionKind::RightEdge => self.edge_blocker(b, a),
                    ActionKind::LeftRemote => self.remote_blocker(a, b),
                    _ => self.remote_blocker(b, a),
                }
            }
            ActionKind::Swap => match (s0, s1) {
                (Some(_), Some(b)) if b == root => Some("root cannot be swapped"),
                (Some(a), Some(b)) if b < a => None,
                (Some(_), Some(_)) => Some("swap requires i(s1) < i(s0)"),
                _ => Some("fewer than two stack items"),
            },
            ActionKind::Finish => {
                (self.stack.as_slice() != [root] || !self.buffer.is_empty())
                    .then_some("finish requires stack [root] and an empty buffer")
            }
        }
    }

    /// Kinds whose structural preconditions hold, in precedence order.
    pub fn legal_kinds(&self) -> Result<Vec<ActionKind>, TransitionError> {
        if self.terminal {
            return Err(TransitionError::Terminal);
        }
        Ok(ActionKind::ALL
            .iter()
            .copied()
            .filter(|&k| self.kind_blocker(k).is_none())
            .collect())
    }

    /// Full legality check including label constraints.
    pub fn check(&self, action: &Action) -> Result<(), TransitionError> {
        if self.terminal {
            return Err(TransitionError::Terminal);
        }
        let illegal = |reason| TransitionError::Illegal {
            action: action.to_string(),
            reason,
        };
        if let Some(reason) = self.kind_blocker(action.kind()) {
            return Err(illegal(reason));
        }
        let refined = action.label().map(|l| l.refinement.is_some()).unwrap_or(false);
        if !refined {
            return Ok(());
        }
        match (self.system, action) {
            (_, Action::Implicit(_)) => Ok(()),
            (SystemKind::ImplicitStandard, Action::LeftEdge(_) | Action::RightEdge(_)) => {
                let child = match action {
                    Action::LeftEdge(_) => self.s(1),
                    _ => self.s(0),
                }
                .expect("checked by kind_blocker");
                let c = &self.nodes[child.index()];
                if c.kind != StateNodeKind::Created || !c.out.is_empty() {
                    Err(illegal("refined labels only attach childless created nodes"))
                } else {
                    Ok(())
                }
            }
            _ => Err(illegal("refined labels are reserved for implicit edges")),
        }
    }

    fn new_node(&mut self, kind: StateNodeKind) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(StateNode::new(kind));
        id
    }

    fn add_edge(&mut self, src: NodeId, tgt: NodeId, label: EdgeLabel, attr: EdgeAttr) {
        let i = self.edges.len();
        self.edges.push(Edge {
            src,
            tgt,
            label,
            attr,
        });
        self.nodes[src.index()].out.push(i);
        let child = &mut self.nodes[tgt.index()];
        child.inc.push(i);
        if attr.is_tree() {
            debug_assert!(child.tree_parent.is_none(), "second primary parent");
            child.tree_parent = Some(i);
            if label.refinement.is_some() {
                child.committed_implicit = true;
            }
        }
    }

    /// Applies a legal action. Illegal actions are rejected and leave the
    /// state unchanged.
    pub fn apply(&mut self, action: &Action) -> Result<(), TransitionError> {
        self.check(action)?;
        let s0 = self.s(0);
        let s1 = self.s(1);
        match *action {
            Action::Shift => {
                let b0 = self.buffer.pop_front().expect("checked");
                self.stack.push(b0);
            }
            Action::Reduce => {
                let x = self.stack.pop().expect("checked");
                if self.nodes[x.index()].tree_parent.is_none() {
                    self.orphaned += 1;
                    log::debug!("reduced node {x} without a primary parent");
                }
            }
            Action::NodeEager(label) => {
                let x = s0.expect("checked");
                let y = self.new_node(StateNodeKind::Created);
                self.add_edge(y, x, label, EdgeAttr::Primary);
                debug_assert_eq!(self.edges.last().map(|e| (e.src, e.tgt)), Some((y, x)));
                self.buffer.push_front(y);
            }
            Action::NodeStandard => {
                let y = self.new_node(StateNodeKind::Created);
                self.buffer.push_front(y);
            }
            Action::Implicit(label) => {
                let x = s0.expect("checked");
                let y = self.new_node(StateNodeKind::Implicit);
                self.add_edge(x, y, label, EdgeAttr::Implicit);
                debug_assert_eq!(self.edges.last().map(|e| (e.src, e.tgt)), Some((x, y)));
                self.buffer.push_front(y);
            }
            Action::LeftEdge(label) => self.add_edge(s0.unwrap(), s1.unwrap(), label, EdgeAttr::Primary),
            Action::RightEdge(label) => self.add_edge(s1.unwrap(), s0.unwrap(), label, EdgeAttr::Primary),
            Action::LeftRemote(label) => self.add_edge(s0.unwrap(), s1.unwrap(), label, EdgeAttr::Remote),
            Action::RightRemote(label) => self.add_edge(s1.unwrap(), s0.unwrap(), label, EdgeAttr::Remote),
            Action::Swap => {
                let top = self.stack.pop().unwrap();
                let second = self.stack.pop().unwrap();
                self.stack.push(top);
                self.buffer.push_front(second);
            }
            Action::Finish => {
                self.stack.clear();
                self.terminal = true;
            }
        }
        self.history.push(*action);
        Ok(())
    }

    /// Consuming variant of [`apply`](Self::apply).
    pub fn applied(mut self, action: &Action) -> Result<Self, TransitionError> {
        self.apply(action)?;
        Ok(self)
    }

    /// Drives the state to Finish using only Reduce, Shift and Finish.
    pub fn force_finish(&mut self) {
        while !self.terminal {
            let next = if self.s(0) != Some(self.root()) {
                Action::Reduce
            } else if !self.buffer.is_empty() {
                Action::Shift
            } else {
                Action::Finish
            };
            self.apply(&next).expect("reduce/shift/finish are always legal here");
        }
    }

    /// The graph built so far, regardless of the terminal flag.
    ///
    /// Standard system: a created node that ends up without children is an
    /// implicit node and its parent edge becomes an implicit edge.
    pub fn snapshot(&self) -> Graph {
        let mut nodes = self.terminals.clone();
        let mut implicit = vec![false; self.nodes.len()];
        for (i, sn) in self.nodes.iter().enumerate().skip(self.terminals.len()) {
            let kind = match sn.kind {
                StateNodeKind::Root => NodeKind::Root,
                StateNodeKind::Implicit => NodeKind::Implicit,
                StateNodeKind::Created => {
                    let leaf = sn.out.is_empty() && sn.tree_parent.is_some();
                    if self.system == SystemKind::ImplicitStandard && leaf {
                        implicit[i] = true;
                        NodeKind::Implicit
                    } else {
                        NodeKind::NonTerminal
                    }
                }
                StateNodeKind::Terminal => unreachable!("terminals come first"),
            };
            nodes.push(Node {
                id: NodeId(i as u32),
                kind,
            });
        }
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let mut e = *e;
                if implicit[e.tgt.index()] && e.attr == EdgeAttr::Primary {
                    e.attr = EdgeAttr::Implicit;
                }
                e
            })
            .collect();
        Graph::new(nodes, edges, self.root()).expect("state ids are dense")
    }

    /// The finished graph. Validation is left to the caller.
    pub fn extract_graph(&self) -> Result<Graph, TransitionError> {
        if !self.terminal {
            return Err(TransitionError::NotTerminal);
        }
        Ok(self.snapshot())
    }
}
