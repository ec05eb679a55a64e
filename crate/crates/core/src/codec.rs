//! Canonical JSON interchange for documents and JSON Lines corpora.

use std::collections::BTreeSet;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    validate, Category, Edge, EdgeAttr, EdgeLabel, Graph, GraphError, Node, NodeId, NodeKind,
    Refinement, Span, Violation,
};

pub mod bracket;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("malformed JSON: {0}")]
    Malformed(String),
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("graph validation failed: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl CodecError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        CodecError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// A sentence with its tokenization and graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Vec<Span>,
    pub graph: Graph,
}

impl Document {
    pub fn token_texts(&self) -> Vec<&str> {
        self.graph.terminal_texts()
    }
}

// Field order is alphabetical so serialization emits sorted keys.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireDocument {
    edges: Vec<WireEdge>,
    id: String,
    nodes: Vec<WireNode>,
    root: u32,
    text: String,
    tokens: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireEdge {
    attr: WireAttr,
    cat: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    refinement: Option<String>,
    src: u32,
    tgt: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireNode {
    id: u32,
    kind: WireKind,
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "lowercase")]
enum WireKind {
    Root,
    Terminal,
    Nonterminal,
    Implicit,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum WireAttr {
    Primary,
    Remote,
    Implicit,
}

impl From<WireAttr> for EdgeAttr {
    fn from(a: WireAttr) -> Self {
        match a {
            WireAttr::Primary => EdgeAttr::Primary,
            WireAttr::Remote => EdgeAttr::Remote,
            WireAttr::Implicit => EdgeAttr::Implicit,
        }
    }
}

impl From<EdgeAttr> for WireAttr {
    fn from(a: EdgeAttr) -> Self {
        match a {
            EdgeAttr::Primary => WireAttr::Primary,
            EdgeAttr::Remote => WireAttr::Remote,
            EdgeAttr::Implicit => WireAttr::Implicit,
        }
    }
}

/// Decodes one document and validates its graph.
pub fn read_document(bytes: &[u8]) -> Result<Document, CodecError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let wire: WireDocument = match serde_path_to_error::deserialize(&mut de) {
        Ok(w) => w,
        Err(err) => {
            let path = err.path().to_string();
            let inner = err.into_inner();
            return Err(match inner.classify() {
                serde_json::error::Category::Data => CodecError::schema(path, inner.to_string()),
                _ => CodecError::Malformed(inner.to_string()),
            });
        }
    };
    de.end().map_err(|e| CodecError::Malformed(e.to_string()))?;
    let doc = from_wire(wire)?;
    let violations = validate(&doc.graph);
    if !violations.is_empty() {
        return Err(CodecError::Invalid(violations));
    }
    Ok(doc)
}

fn from_wire(wire: WireDocument) -> Result<Document, CodecError> {
    let chars: Vec<char> = wire.text.chars().collect();
    let mut tokens = Vec::with_capacity(wire.tokens.len());
    let mut last_end = 0;
    for (i, &(from, to)) in wire.tokens.iter().enumerate() {
        if from >= to || from < last_end || to > chars.len() {
            return Err(CodecError::schema(
                format!("tokens[{i}]"),
                format!("span [{from},{to}) is empty, overlapping or outside the text"),
            ));
        }
        last_end = to;
        tokens.push(Span { from, to });
    }

    let mut wire_nodes = wire.nodes;
    wire_nodes.sort_by_key(|n| n.id);
    let mut nodes = Vec::with_capacity(wire_nodes.len());
    for (position, n) in wire_nodes.iter().enumerate() {
        if n.id as usize != position {
            return Err(CodecError::schema(
                "nodes",
                format!("node ids must be dense 0..{}, missing or repeated id near {}", wire_nodes.len(), n.id),
            ));
        }
        let is_terminal_slot = position < tokens.len();
        if is_terminal_slot != (n.kind == WireKind::Terminal) {
            return Err(CodecError::schema(
                format!("nodes[id={}].kind", n.id),
                format!("ids 0..{} must be exactly the terminals", tokens.len()),
            ));
        }
        let kind = match n.kind {
            WireKind::Terminal => {
                let span = tokens[position];
                NodeKind::Terminal {
                    text: chars[span.from..span.to].iter().collect(),
                    anchor: span,
                }
            }
            WireKind::Nonterminal => NodeKind::NonTerminal,
            WireKind::Implicit => NodeKind::Implicit,
            WireKind::Root => NodeKind::Root,
        };
        nodes.push(Node {
            id: NodeId(n.id),
            kind,
        });
    }
    match nodes.get(wire.root as usize) {
        Some(Node {
            kind: NodeKind::Root, ..
        }) => {}
        _ => {
            return Err(CodecError::schema(
                "root",
                format!("{} is not a node of kind root", wire.root),
            ))
        }
    }

    let mut edges = Vec::with_capacity(wire.edges.len());
    for (i, e) in wire.edges.iter().enumerate() {
        for (field, id) in [("src", e.src), ("tgt", e.tgt)] {
            if id as usize >= nodes.len() {
                return Err(CodecError::schema(
                    format!("edges[{i}].{field}"),
                    format!("unknown node {id}"),
                ));
            }
        }
        let category: Category = e
            .cat
            .parse()
            .map_err(|err: GraphError| CodecError::schema(format!("edges[{i}].cat"), err.to_string()))?;
        let attr = EdgeAttr::from(e.attr);
        let refinement = match &e.refinement {
            None => None,
            Some(_) if attr != EdgeAttr::Implicit => {
                return Err(CodecError::schema(
                    format!("edges[{i}].refinement"),
                    "refinement is only allowed on implicit edges",
                ))
            }
            Some(r) => Some(r.parse::<Refinement>().map_err(|err| {
                CodecError::schema(format!("edges[{i}].refinement"), err.to_string())
            })?),
        };
        edges.push(Edge {
            src: NodeId(e.src),
            tgt: NodeId(e.tgt),
            label: EdgeLabel {
                category,
                refinement,
            },
            attr,
        });
    }

    let graph = Graph::new(nodes, edges, NodeId(wire.root))
        .map_err(|e| CodecError::schema("nodes", e.to_string()))?;
    Ok(Document {
        id: wire.id,
        text: wire.text,
        tokens,
        graph,
    })
}

fn to_wire(doc: &Document) -> WireDocument {
    let mut edges: Vec<&Edge> = doc.graph.edges().iter().collect();
    edges.sort_by_key(|e| (e.src, e.tgt, e.label, e.attr));
    WireDocument {
        edges: edges
            .into_iter()
            .map(|e| WireEdge {
                attr: e.attr.into(),
                cat: e.label.category.code().to_string(),
                refinement: e.label.refinement.map(|r| r.wire().to_string()),
                src: e.src.0,
                tgt: e.tgt.0,
            })
            .collect(),
        id: doc.id.clone(),
        nodes: doc
            .graph
            .nodes()
            .iter()
            .map(|n| WireNode {
                id: n.id.0,
                kind: match n.kind {
                    NodeKind::Terminal { .. } => WireKind::Terminal,
                    NodeKind::NonTerminal => WireKind::Nonterminal,
                    NodeKind::Implicit => WireKind::Implicit,
                    NodeKind::Root => WireKind::Root,
                },
            })
            .collect(),
        root: doc.graph.root().0,
        text: doc.text.clone(),
        tokens: doc.tokens.iter().map(|s| (s.from, s.to)).collect(),
    }
}

/// Serializes to a single line of canonical JSON (no trailing newline).
pub fn write_document(doc: &Document) -> Result<Vec<u8>, CodecError> {
    check_writable(doc)?;
    Ok(serde_json::to_vec(&to_wire(doc)).expect("wire types always serialize"))
}

pub fn write_document_pretty(doc: &Document) -> Result<String, CodecError> {
    check_writable(doc)?;
    Ok(serde_json::to_string_pretty(&to_wire(doc)).expect("wire types always serialize"))
}

fn check_writable(doc: &Document) -> Result<(), CodecError> {
    let violations = validate(&doc.graph);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CodecError::Invalid(violations))
    }
}

/// A decoding failure tied to a line of a JSON Lines corpus.
#[derive(Debug, Error)]
#[error("line {line}: {error}")]
pub struct LineError {
    pub line: usize,
    #[source]
    pub error: CodecError,
}

/// Decodes every non-blank line. Results keep input order.
pub fn read_jsonl(text: &str) -> Vec<Result<Document, LineError>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            read_document(l.as_bytes()).map_err(|error| LineError { line: i + 1, error })
        })
        .collect()
}

/// Decodes a corpus, failing on the first bad line.
pub fn read_corpus(text: &str) -> Result<Vec<Document>, LineError> {
    read_jsonl(text).into_iter().collect()
}

pub fn write_jsonl(docs: &[Document]) -> Result<String, CodecError> {
    let mut out = String::new();
    for d in docs {
        out.push_str(std::str::from_utf8(&write_document(d)?).expect("JSON is UTF-8"));
        out.push('\n');
    }
    Ok(out)
}

/// Counts over a corpus. Implicit units without refinement are counted
/// separately from the six refined types.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub passages: usize,
    pub sentences: usize,
    pub tokens: usize,
    pub nodes: usize,
    pub edges: usize,
    pub deictic: usize,
    pub generic: usize,
    #[serde(rename = "genre-based")]
    pub genre_based: usize,
    #[serde(rename = "type-identifiable")]
    pub type_identifiable: usize,
    #[serde(rename = "non-specific")]
    pub non_specific: usize,
    #[serde(rename = "iterated-set")]
    pub iterated_set: usize,
    pub unrefined_implicit: usize,
    pub implicit_total: usize,
    #[serde(skip)]
    passage_ids: BTreeSet<String>,
}

impl CorpusStats {
    pub fn by_refinement(&self) -> [usize; 6] {
        [
            self.deictic,
            self.generic,
            self.genre_based,
            self.type_identifiable,
            self.non_specific,
            self.iterated_set,
        ]
    }

    fn bump(&mut self, r: Refinement) {
        let slot = match r {
            Refinement::Deictic => &mut self.deictic,
            Refinement::Generic => &mut self.generic,
            Refinement::GenreBased => &mut self.genre_based,
            Refinement::TypeIdentifiable => &mut self.type_identifiable,
            Refinement::NonSpecific => &mut self.non_specific,
            Refinement::IteratedSet => &mut self.iterated_set,
        };
        *slot += 1;
    }
}

impl AddAssign<&CorpusStats> for CorpusStats {
    fn add_assign(&mut self, o: &CorpusStats) {
        self.sentences += o.sentences;
        self.tokens += o.tokens;
        self.nodes += o.nodes;
        self.edges += o.edges;
        self.deictic += o.deictic;
        self.generic += o.generic;
        self.genre_based += o.genre_based;
        self.type_identifiable += o.type_identifiable;
        self.non_specific += o.non_specific;
        self.iterated_set += o.iterated_set;
        self.unrefined_implicit += o.unrefined_implicit;
        self.implicit_total += o.implicit_total;
        self.passage_ids.extend(o.passage_ids.iter().cloned());
        self.passages = self.passage_ids.len();
    }
}

impl Add for CorpusStats {
    type Output = CorpusStats;

    fn add(mut self, o: CorpusStats) -> CorpusStats {
        self += &o;
        self
    }
}

/// Passage a sentence belongs to: the id up to its first `.`.
pub fn passage_id(doc_id: &str) -> &str {
    doc_id.split('.').next().unwrap_or(doc_id)
}

pub fn corpus_stats<'a>(docs: impl IntoIterator<Item = &'a Document>) -> CorpusStats {
    let mut s = CorpusStats::default();
    for d in docs {
        s.sentences += 1;
        s.passage_ids.insert(passage_id(&d.id).to_string());
        s.tokens += d.tokens.len();
        s.nodes += d.graph.nodes().len();
        s.edges += d.graph.edges().len();
        for e in d.graph.edges() {
            if e.attr != EdgeAttr::Implicit {
                continue;
            }
            s.implicit_total += 1;
            match e.label.refinement {
                Some(r) => s.bump(r),
                None => s.unrefined_implicit += 1,
            }
        }
    }
    s.passages = s.passage_ids.len();
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"id":"d1","text":"Hi","tokens":[[0,2]],"nodes":[{"id":0,"kind":"terminal"},{"id":1,"kind":"root"}],"edges":[{"src":1,"tgt":0,"cat":"H","attr":"primary"}],"root":1}"#;

    #[test]
    fn minimal_document() {
        let d = read_document(MINIMAL.as_bytes()).unwrap();
        assert_eq!(d.graph.nodes().len(), 2);
        assert_eq!(d.token_texts(), vec!["Hi"]);
        // canonical output has sorted keys
        let out = String::from_utf8(write_document(&d).unwrap()).unwrap();
        assert_eq!(
            out,
            r#"{"edges":[{"attr":"primary","cat":"H","src":1,"tgt":0}],"id":"d1","nodes":[{"id":0,"kind":"terminal"},{"id":1,"kind":"root"}],"root":1,"text":"Hi","tokens":[[0,2]]}"#
        );
        assert_eq!(read_document(&write_document(&d).unwrap()).unwrap(), d);
    }

    #[test]
    fn refinement_on_primary_edge_is_schema_error() {
        let bad = MINIMAL.replace(r#""attr":"primary""#, r#""attr":"primary","refinement":"generic""#);
        match read_document(bad.as_bytes()) {
            Err(CodecError::Schema { path, .. }) => assert_eq!(path, "edges[0].refinement"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn error_classes_are_distinct() {
        assert!(matches!(
            read_document(b"{\"id\": "),
            Err(CodecError::Malformed(_))
        ));
        let unknown = MINIMAL.replace(r#""cat":"H""#, r#""cat":"Z""#);
        assert!(matches!(
            read_document(unknown.as_bytes()),
            Err(CodecError::Schema { .. })
        ));
        let wrong_type = MINIMAL.replace(r#""root":1"#, r#""root":"one""#);
        match read_document(wrong_type.as_bytes()) {
            Err(CodecError::Schema { path, .. }) => assert_eq!(path, "root"),
            other => panic!("{other:?}"),
        }
        let orphan = MINIMAL.replace(r#"[{"src":1,"tgt":0,"cat":"H","attr":"primary"}]"#, "[]");
        assert!(matches!(
            read_document(orphan.as_bytes()),
            Err(CodecError::Invalid(_))
        ));
        let extra = MINIMAL.replace(r#""root":1"#, r#""root":1,"lang":"en""#);
        assert!(matches!(
            read_document(extra.as_bytes()),
            Err(CodecError::Schema { .. })
        ));
    }

    #[test]
    fn overlapping_tokens_rejected() {
        let doc = r#"{"id":"d","text":"ab","tokens":[[0,2],[1,2]],"nodes":[{"id":0,"kind":"terminal"},{"id":1,"kind":"terminal"},{"id":2,"kind":"root"}],"edges":[],"root":2}"#;
        match read_document(doc.as_bytes()) {
            Err(CodecError::Schema { path, .. }) => assert_eq!(path, "tokens[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_corpus_stats_are_zero() {
        let s = corpus_stats(&[]);
        assert_eq!(s, CorpusStats::default());
        assert_eq!(s.by_refinement(), [0; 6]);
    }

    #[test]
    fn passage_prefix() {
        assert_eq!(passage_id("reviews-086839.2"), "reviews-086839");
        assert_eq!(passage_id("solo"), "solo");
    }
}
