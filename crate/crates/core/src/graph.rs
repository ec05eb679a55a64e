//! Anchored DAG model for UCCA graphs with implicit units.
//!
//! Node identity is a dense creation index: terminals occupy `0..n` in
//! token order, the root and all other nodes follow.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown node id {0}")]
    UnknownNode(u32),
    #[error("node at position {position} carries id {id}")]
    NonDenseIds { position: usize, id: u32 },
    #[error("terminal nodes must occupy ids 0..{expected}, found terminal {id}")]
    TerminalOrder { expected: usize, id: u32 },
    #[error("root {0} is not a node of kind root")]
    BadRoot(u32),
    #[error("edge {index} references unknown node {id}")]
    DanglingEdge { index: usize, id: u32 },
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("unknown refinement {0:?}")]
    UnknownRefinement(String),
    #[error("graph is invalid: {0}")]
    Invalid(String),
}

/// Foundational layer categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    A,
    C,
    D,
    E,
    F,
    G,
    H,
    L,
    N,
    P,
    Q,
    R,
    S,
    T,
    U,
}

impl Category {
    pub const ALL: [Category; 15] = [
        Category::A,
        Category::C,
        Category::D,
        Category::E,
        Category::F,
        Category::G,
        Category::H,
        Category::L,
        Category::N,
        Category::P,
        Category::Q,
        Category::R,
        Category::S,
        Category::T,
        Category::U,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Category::A => "A",
            Category::C => "C",
            Category::D => "D",
            Category::E => "E",
            Category::F => "F",
            Category::G => "G",
            Category::H => "H",
            Category::L => "L",
            Category::N => "N",
            Category::P => "P",
            Category::Q => "Q",
            Category::R => "R",
            Category::S => "S",
            Category::T => "T",
            Category::U => "U",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::A => "Participant",
            Category::C => "Center",
            Category::D => "Adverbial",
            Category::E => "Elaborator",
            Category::F => "Function",
            Category::G => "Ground",
            Category::H => "ParallelScene",
            Category::L => "Linker",
            Category::N => "Connector",
            Category::P => "Process",
            Category::Q => "Quantifier",
            Category::R => "Relator",
            Category::S => "State",
            Category::T => "Time",
            Category::U => "Punctuation",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Category {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.code() == s)
            .ok_or_else(|| GraphError::UnknownCategory(s.to_string()))
    }
}

/// The six fine-grained implicit argument types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Refinement {
    Deictic,
    Generic,
    GenreBased,
    TypeIdentifiable,
    NonSpecific,
    IteratedSet,
}

impl Refinement {
    pub const ALL: [Refinement; 6] = [
        Refinement::Deictic,
        Refinement::Generic,
        Refinement::GenreBased,
        Refinement::TypeIdentifiable,
        Refinement::NonSpecific,
        Refinement::IteratedSet,
    ];

    /// Human-readable name, e.g. `Genre-based`.
    pub fn name(self) -> &'static str {
        match self {
            Refinement::Deictic => "Deictic",
            Refinement::Generic => "Generic",
            Refinement::GenreBased => "Genre-based",
            Refinement::TypeIdentifiable => "Type-identifiable",
            Refinement::NonSpecific => "Non-specific",
            Refinement::IteratedSet => "Iterated-set",
        }
    }

    /// Interchange string, e.g. `genre-based`.
    pub fn wire(self) -> &'static str {
        match self {
            Refinement::Deictic => "deictic",
            Refinement::Generic => "generic",
            Refinement::GenreBased => "genre-based",
            Refinement::TypeIdentifiable => "type-identifiable",
            Refinement::NonSpecific => "non-specific",
            Refinement::IteratedSet => "iterated-set",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Refinement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Refinement {
    type Err = GraphError;

    /// Accepts both the interchange and the display spelling, ignoring case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Refinement::ALL
            .iter()
            .copied()
            .find(|r| r.wire() == lower)
            .ok_or_else(|| GraphError::UnknownRefinement(s.to_string()))
    }
}

/// Category plus optional implicit refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeLabel {
    pub category: Category,
    pub refinement: Option<Refinement>,
}

impl EdgeLabel {
    pub fn new(category: Category) -> Self {
        EdgeLabel {
            category,
            refinement: None,
        }
    }

    pub fn refined(category: Category, refinement: Refinement) -> Self {
        EdgeLabel {
            category,
            refinement: Some(refinement),
        }
    }

    pub fn unrefined(self) -> Self {
        EdgeLabel::new(self.category)
    }

    /// Lower-case refinement spelling used in action traces: `A+genre-based`.
    pub fn trace_form(&self) -> String {
        match self.refinement {
            Some(r) => format!("{}+{}", self.category, r.wire()),
            None => self.category.code().to_string(),
        }
    }

    /// Short name used in confusion tables: the refinement alone for refined
    /// Participants, otherwise the full label.
    pub fn short_name(&self) -> String {
        match (self.category, self.refinement) {
            (Category::A, Some(r)) => r.name().to_string(),
            _ => self.to_string(),
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.refinement {
            Some(r) => write!(f, "{}+{}", self.category, r.name()),
            None => write!(f, "{}", self.category),
        }
    }
}

impl FromStr for EdgeLabel {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('+') {
            Some((cat, refinement)) => Ok(EdgeLabel::refined(cat.parse()?, refinement.parse()?)),
            None => Ok(EdgeLabel::new(s.parse()?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Character span `[from, to)` into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Terminal { text: String, anchor: Span },
    NonTerminal,
    Implicit,
    Root,
}

impl NodeKind {
    pub fn wire(&self) -> &'static str {
        match self {
            NodeKind::Terminal { .. } => "terminal",
            NodeKind::NonTerminal => "nonterminal",
            NodeKind::Implicit => "implicit",
            NodeKind::Root => "root",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, NodeKind::Terminal { .. })
    }

    pub fn is_implicit(&self) -> bool {
        matches!(self.kind, NodeKind::Implicit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeAttr {
    Primary,
    Remote,
    Implicit,
}

impl EdgeAttr {
    pub fn wire(self) -> &'static str {
        match self {
            EdgeAttr::Primary => "primary",
            EdgeAttr::Remote => "remote",
            EdgeAttr::Implicit => "implicit",
        }
    }

    /// Primary and implicit edges both establish the (unique) tree parent.
    pub fn is_tree(self) -> bool {
        matches!(self, EdgeAttr::Primary | EdgeAttr::Implicit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub src: NodeId,
    pub tgt: NodeId,
    pub label: EdgeLabel,
    pub attr: EdgeAttr,
}

/// Immutable anchored DAG. Adjacency lists are built at construction.
#[derive(Debug, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    root: NodeId,
    n_terminals: usize,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        let mut a = self.edges.clone();
        let mut b = other.edges.clone();
        a.sort();
        b.sort();
        self.nodes == other.nodes && self.root == other.root && a == b
    }
}

impl Eq for Graph {}

impl Graph {
    /// Checks the id layout (dense, terminals first, root present) and edge
    /// endpoints. Semantic rules are left to [`validate`].
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>, root: NodeId) -> Result<Graph, GraphError> {
        let mut n_terminals = 0;
        for (position, node) in nodes.iter().enumerate() {
            if node.id.index() != position {
                return Err(GraphError::NonDenseIds {
                    position,
                    id: node.id.0,
                });
            }
            if node.is_terminal() {
                if position != n_terminals {
                    return Err(GraphError::TerminalOrder {
                        expected: n_terminals,
                        id: node.id.0,
                    });
                }
                n_terminals += 1;
            }
        }
        match nodes.get(root.index()) {
            Some(Node {
                kind: NodeKind::Root,
                ..
            }) => {}
            _ => return Err(GraphError::BadRoot(root.0)),
        }
        let mut outgoing = vec![Vec::new(); nodes.len()];
        let mut incoming = vec![Vec::new(); nodes.len()];
        for (index, e) in edges.iter().enumerate() {
            for id in [e.src, e.tgt] {
                if id.index() >= nodes.len() {
                    return Err(GraphError::DanglingEdge { index, id: id.0 });
                }
            }
            outgoing[e.src.index()].push(index);
            incoming[e.tgt.index()].push(index);
        }
        Ok(Graph {
            nodes,
            edges,
            root,
            n_terminals,
            outgoing,
            incoming,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn n_terminals(&self) -> usize {
        self.n_terminals
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, GraphError> {
        self.nodes.get(id.index()).ok_or(GraphError::UnknownNode(id.0))
    }

    pub fn terminal_texts(&self) -> Vec<&str> {
        self.nodes[..self.n_terminals]
            .iter()
            .map(|n| match &n.kind {
                NodeKind::Terminal { text, .. } => text.as_str(),
                _ => unreachable!("terminals occupy the leading ids"),
            })
            .collect()
    }

    pub fn outgoing(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.outgoing[id.index()].iter().map(move |&i| &self.edges[i])
    }

    pub fn incoming(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.incoming[id.index()].iter().map(move |&i| &self.edges[i])
    }

    /// The unique primary-or-implicit parent edge, if any (the first one when
    /// the graph is invalid).
    pub fn tree_parent(&self, id: NodeId) -> Option<&Edge> {
        self.incoming(id).find(|e| e.attr.is_tree())
    }

    pub fn implicit_nodes(&self) -> impl Iterator<Item = &Node> + '_ {
        self.nodes.iter().filter(|n| n.is_implicit())
    }

    /// Terminal positions reachable from `v` through primary edges only.
    pub fn primary_yield(&self, v: NodeId) -> Result<BTreeSet<usize>, GraphError> {
        self.node(v)?;
        let mut out = BTreeSet::new();
        let mut seen = vec![false; self.nodes.len()];
        let mut todo = vec![v];
        while let Some(x) = todo.pop() {
            if std::mem::replace(&mut seen[x.index()], true) {
                continue;
            }
            if x.index() < self.n_terminals {
                out.insert(x.index());
            }
            todo.extend(
                self.outgoing(x)
                    .filter(|e| e.attr == EdgeAttr::Primary)
                    .map(|e| e.tgt),
            );
        }
        Ok(out)
    }

    /// Implicit children grouped per parent, ordered by (yield, parent id).
    pub fn implicit_groups(&self) -> Result<Vec<ImplicitGroup>, GraphError> {
        let violations = validate(self);
        if !violations.is_empty() {
            return Err(GraphError::Invalid(violations[0].to_string()));
        }
        let mut by_parent: BTreeMap<NodeId, Vec<EdgeLabel>> = BTreeMap::new();
        for e in &self.edges {
            if e.attr == EdgeAttr::Implicit {
                by_parent.entry(e.src).or_default().push(e.label);
            }
        }
        let mut groups = by_parent
            .into_iter()
            .map(|(parent, mut labels)| {
                labels.sort();
                Ok(ImplicitGroup {
                    parent,
                    yield_: self.primary_yield(parent)?,
                    labels,
                })
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        groups.sort_by(|a, b| (&a.yield_, a.parent).cmp(&(&b.yield_, b.parent)));
        Ok(groups)
    }
}

/// A parent with at least one implicit child: the unit of implicit matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplicitGroup {
    pub parent: NodeId,
    pub yield_: BTreeSet<usize>,
    /// Sorted multiset of implicit edge labels.
    pub labels: Vec<EdgeLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    Cycle,
    MultiplePrimaryParents,
    MissingPrimaryParent,
    ImplicitNotLeaf,
    ImplicitEdgeTarget,
    ImplicitWithoutImplicitEdge,
    RemoteToImplicit,
    RemoteToPunctuation,
    RefinementOnNonImplicit,
    TerminalNotLeaf,
    UnreachableTerminal,
    RootHasParent,
    ExtraRoot,
    NonTerminalWithoutPrimaryChild,
    DuplicateEdge,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subject {
    Node(NodeId),
    Edge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: Subject,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.subject {
            Subject::Node(id) => write!(f, "{} at node {}: {}", self.kind, id, self.detail),
            Subject::Edge(i) => write!(f, "{} at edge #{}: {}", self.kind, i, self.detail),
        }
    }
}

/// Lists every broken structural rule. An empty list means the graph is
/// well-formed.
pub fn validate(g: &Graph) -> Vec<Violation> {
    let mut out = Vec::new();
    let node_v = |kind, id: NodeId, detail: String| Violation {
        kind,
        subject: Subject::Node(id),
        detail,
    };
    let edge_v = |kind, index: usize, detail: String| Violation {
        kind,
        subject: Subject::Edge(index),
        detail,
    };

    let mut pairs = BTreeSet::new();
    for (i, e) in g.edges.iter().enumerate() {
        let target = &g.nodes[e.tgt.index()];
        if !pairs.insert((e.src, e.tgt)) {
            out.push(edge_v(
                ViolationKind::DuplicateEdge,
                i,
                format!("second edge {} -> {}", e.src, e.tgt),
            ));
        }
        if e.label.refinement.is_some() && e.attr != EdgeAttr::Implicit {
            out.push(edge_v(
                ViolationKind::RefinementOnNonImplicit,
                i,
                format!("{} edge labelled {}", e.attr.wire(), e.label),
            ));
        }
        match e.attr {
            EdgeAttr::Implicit if !target.is_implicit() => out.push(edge_v(
                ViolationKind::ImplicitEdgeTarget,
                i,
                format!("implicit edge targets {} node {}", target.kind.wire(), e.tgt),
            )),
            EdgeAttr::Remote if target.is_implicit() => out.push(edge_v(
                ViolationKind::RemoteToImplicit,
                i,
                format!("remote edge targets implicit node {}", e.tgt),
            )),
            EdgeAttr::Remote if target.is_terminal() && is_punctuation(g, e.tgt) => {
                out.push(edge_v(
                    ViolationKind::RemoteToPunctuation,
                    i,
                    format!("remote edge targets punctuation terminal {}", e.tgt),
                ))
            }
            _ => {}
        }
    }

    for node in &g.nodes {
        let id = node.id;
        let tree_parents = g.incoming(id).filter(|e| e.attr.is_tree()).count();
        let out_degree = g.outgoing(id).count();
        match node.kind {
            NodeKind::Root => {
                if id != g.root {
                    out.push(node_v(ViolationKind::ExtraRoot, id, "second root node".into()));
                }
                if g.incoming(id).next().is_some() {
                    out.push(node_v(
                        ViolationKind::RootHasParent,
                        id,
                        "root has an incoming edge".into(),
                    ));
                }
                continue;
            }
            NodeKind::Implicit => {
                if out_degree > 0 {
                    out.push(node_v(
                        ViolationKind::ImplicitNotLeaf,
                        id,
                        format!("implicit node has {out_degree} outgoing edge(s)"),
                    ));
                }
                if g.incoming(id).any(|e| e.attr == EdgeAttr::Primary) {
                    out.push(node_v(
                        ViolationKind::ImplicitWithoutImplicitEdge,
                        id,
                        "implicit node attached by a primary edge".into(),
                    ));
                }
            }
            NodeKind::Terminal { .. } => {
                if out_degree > 0 {
                    out.push(node_v(
                        ViolationKind::TerminalNotLeaf,
                        id,
                        format!("terminal has {out_degree} outgoing edge(s)"),
                    ));
                }
            }
            NodeKind::NonTerminal => {
                if !g.outgoing(id).any(|e| e.attr == EdgeAttr::Primary) {
                    out.push(node_v(
                        ViolationKind::NonTerminalWithoutPrimaryChild,
                        id,
                        "non-terminal has no primary child".into(),
                    ));
                }
            }
        }
        if tree_parents == 0 {
            out.push(node_v(
                ViolationKind::MissingPrimaryParent,
                id,
                "no primary or implicit parent".into(),
            ));
        } else if tree_parents > 1 {
            out.push(node_v(
                ViolationKind::MultiplePrimaryParents,
                id,
                format!("{tree_parents} primary or implicit parents"),
            ));
        }
    }

    out.extend(find_cycles(g).into_iter().map(|id| {
        node_v(ViolationKind::Cycle, id, "node lies on a directed cycle".into())
    }));

    if let Ok(reachable) = g.primary_yield(g.root) {
        for t in 0..g.n_terminals {
            if !reachable.contains(&t) {
                out.push(node_v(
                    ViolationKind::UnreachableTerminal,
                    NodeId(t as u32),
                    "terminal not reachable from root via primary edges".into(),
                ));
            }
        }
    }
    out
}

/// A terminal whose tree parent edge is labelled U.
pub fn is_punctuation(g: &Graph, id: NodeId) -> bool {
    g.tree_parent(id)
        .map(|e| e.label.category == Category::U)
        .unwrap_or(false)
}

/// One representative node per back edge found by an iterative DFS.
fn find_cycles(g: &Graph) -> Vec<NodeId> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let n = g.nodes.len();
    let mut mark = vec![Mark::White; n];
    let mut found = Vec::new();
    // roots first so reports are stable
    let order = std::iter::once(g.root.index()).chain(0..n);
    for start in order {
        if mark[start] != Mark::White {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        mark[start] = Mark::Grey;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&ei) = g.outgoing[v].get(*next) {
                *next += 1;
                let w = g.edges[ei].tgt.index();
                match mark[w] {
                    Mark::White => {
                        mark[w] = Mark::Grey;
                        stack.push((w, 0));
                    }
                    Mark::Grey => found.push(NodeId(w as u32)),
                    Mark::Black => {}
                }
            } else {
                mark[v] = Mark::Black;
                stack.pop();
            }
        }
    }
    found
}

/// Incremental construction helper. Terminal anchors are derived by joining
/// the tokens with single spaces.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    root: NodeId,
}

impl GraphBuilder {
    pub fn new<S: AsRef<str>>(tokens: &[S]) -> Self {
        let mut nodes = Vec::with_capacity(tokens.len() + 1);
        let mut offset = 0;
        for (i, tok) in tokens.iter().enumerate() {
            let text = tok.as_ref().to_string();
            let len = text.chars().count();
            nodes.push(Node {
                id: NodeId(i as u32),
                kind: NodeKind::Terminal {
                    text,
                    anchor: Span {
                        from: offset,
                        to: offset + len,
                    },
                },
            });
            offset += len + 1;
        }
        let root = NodeId(nodes.len() as u32);
        nodes.push(Node {
            id: root,
            kind: NodeKind::Root,
        });
        GraphBuilder { nodes, edges: Vec::new(), root }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn terminal(&self, i: usize) -> NodeId {
        NodeId(i as u32)
    }

    fn push(&mut self, kind: NodeKind) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { id, kind });
        id
    }

    pub fn nonterminal(&mut self) -> NodeId {
        self.push(NodeKind::NonTerminal)
    }

    /// Adds a primary edge.
    pub fn edge(&mut self, src: NodeId, tgt: NodeId, label: &str) -> &mut Self {
        self.raw_edge(src, tgt, label, EdgeAttr::Primary)
    }

    pub fn remote(&mut self, src: NodeId, tgt: NodeId, label: &str) -> &mut Self {
        self.raw_edge(src, tgt, label, EdgeAttr::Remote)
    }

    /// New non-terminal attached under `parent` by a primary edge.
    pub fn unit(&mut self, parent: NodeId, label: &str) -> NodeId {
        let id = self.nonterminal();
        self.edge(parent, id, label);
        id
    }

    /// New implicit node attached under `parent` by an implicit edge.
    pub fn implicit(&mut self, parent: NodeId, label: &str) -> NodeId {
        let id = self.push(NodeKind::Implicit);
        self.raw_edge(parent, id, label, EdgeAttr::Implicit);
        id
    }

    /// Adds an implicit node with no edges; useful for building invalid graphs.
    pub fn bare_implicit(&mut self) -> NodeId {
        self.push(NodeKind::Implicit)
    }

    pub fn raw_edge(&mut self, src: NodeId, tgt: NodeId, label: &str, attr: EdgeAttr) -> &mut Self {
        let label = label
            .parse()
            .unwrap_or_else(|e| panic!("bad label {label:?}: {e}"));
        self.edges.push(Edge {
            src,
            tgt,
            label,
            attr,
        });
        self
    }

    pub fn build(self) -> Graph {
        Graph::new(self.nodes, self.edges, self.root).expect("builder keeps ids dense")
    }
}
