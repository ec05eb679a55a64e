//! Post-decoding cleanup so that every predicted graph validates.

use std::collections::BTreeSet;

use crate::graph::{
    validate, Category, Edge, EdgeAttr, EdgeLabel, Graph, Node, NodeId, NodeKind, Subject, ViolationKind,
};

const MAX_ROUNDS: usize = 8;

fn looks_like_punctuation(text: &str) -> bool {
    !text.is_empty() && text.chars().all(|c| !c.is_alphanumeric())
}

fn attachment_label(g: &Graph, v: NodeId) -> EdgeLabel {
    match &g.nodes()[v.index()].kind {
        NodeKind::Terminal { text, .. } if looks_like_punctuation(text) => EdgeLabel::new(Category::U),
        _ => EdgeLabel::new(Category::H),
    }
}

/// All terminals directly under the root.
pub fn flat_graph(g: &Graph) -> Graph {
    let n = g.n_terminals();
    let root = NodeId(n as u32);
    let mut nodes: Vec<Node> = g.nodes()[..n].to_vec();
    nodes.push(Node {
        id: root,
        kind: NodeKind::Root,
    });
    let edges = (0..n)
        .map(|i| Edge {
            src: root,
            tgt: NodeId(i as u32),
            label: attachment_label(g, NodeId(i as u32)),
            attr: EdgeAttr::Primary,
        })
        .collect();
    Graph::new(nodes, edges, root).expect("flat graph layout is dense")
}

/// Rebuilds the graph without `dropped` nodes, renumbering non-terminals.
fn rebuild(g: &Graph, dropped: &BTreeSet<NodeId>, edges: Vec<Edge>) -> Graph {
    let mut map = vec![None; g.nodes().len()];
    let mut nodes = Vec::with_capacity(g.nodes().len());
    for node in g.nodes() {
        if dropped.contains(&node.id) {
            continue;
        }
        let id = NodeId(nodes.len() as u32);
        map[node.id.index()] = Some(id);
        nodes.push(Node {
            id,
            kind: node.kind.clone(),
        });
    }
    let edges = edges
        .into_iter()
        .filter_map(|e| {
            Some(Edge {
                src: map[e.src.index()]?,
                tgt: map[e.tgt.index()]?,
                ..e
            })
        })
        .collect();
    let root = map[g.root().index()].expect("root is never dropped");
    Graph::new(nodes, edges, root).expect("renumbered ids are dense")
}

/// Applies local fixes until the graph validates, falling back to a flat
/// graph when a violation has no local fix. Returns the graph and a note
/// per fix.
pub fn repair(g: Graph) -> (Graph, Vec<String>) {
    let mut g = g;
    let mut notes = Vec::new();
    for _ in 0..MAX_ROUNDS {
        let violations = validate(&g);
        if violations.is_empty() {
            return (g, notes);
        }
        let mut edges: Vec<Option<Edge>> = g.edges().iter().copied().map(Some).collect();
        let mut added = Vec::new();
        let mut dropped = BTreeSet::new();
        for v in &violations {
            match (v.kind, &v.subject) {
                (ViolationKind::MissingPrimaryParent, Subject::Node(id)) => {
                    let label = attachment_label(&g, *id);
                    added.push(Edge {
                        src: g.root(),
                        tgt: *id,
                        label,
                        attr: EdgeAttr::Primary,
                    });
                    notes.push(format!("attached orphan {id} to root as {label}"));
                }
                (
                    ViolationKind::RemoteToImplicit | ViolationKind::RemoteToPunctuation | ViolationKind::DuplicateEdge,
                    Subject::Edge(i),
                ) => {
                    edges[*i] = None;
                    notes.push(format!("dropped edge #{i} ({})", v.kind));
                }
                (ViolationKind::RefinementOnNonImplicit, Subject::Edge(i)) => {
                    if let Some(e) = edges[*i].as_mut() {
                        e.label = e.label.unrefined();
                    }
                    notes.push(format!("removed refinement from edge #{i}"));
                }
                (ViolationKind::ImplicitEdgeTarget, Subject::Edge(i)) => {
                    if let Some(e) = edges[*i].as_mut() {
                        e.attr = EdgeAttr::Primary;
                        e.label = e.label.unrefined();
                    }
                    notes.push(format!("made edge #{i} primary"));
                }
                // resolved once its ancestors are attached
                (ViolationKind::UnreachableTerminal, _) => {}
                (
                    ViolationKind::NonTerminalWithoutPrimaryChild | ViolationKind::ImplicitWithoutImplicitEdge,
                    Subject::Node(id),
                ) => {
                    dropped.insert(*id);
                    // implicit children cannot outlive their parent
                    for e in g.outgoing(*id).filter(|e| e.attr == EdgeAttr::Implicit) {
                        dropped.insert(e.tgt);
                    }
                    notes.push(format!("pruned node {id} ({})", v.kind));
                }
                _ => {
                    notes.push(format!("no local fix for {v}; using a flat graph"));
                    return (flat_graph(&g), notes);
                }
            }
        }
        let edges = edges.into_iter().flatten().chain(added).collect();
        g = rebuild(&g, &dropped, edges);
    }
    if validate(&g).is_empty() {
        return (g, notes);
    }
    notes.push("repair did not converge; using a flat graph".to_string());
    (flat_graph(&g), notes)
}
