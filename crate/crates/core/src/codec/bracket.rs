//! Compact bracketed annotation, used to author fixtures by hand.
//!
//! ```text
//! [Great/D service/P IMP/A+generic IMP/A+genre-based]/H and/L [awesome/S prices/A IMP/A+genre-based]/H !/U
//! ```
//!
//! * `word/CAT` is a terminal attached by a primary edge, optionally named
//!   with `=name`.
//! * `[ ... ]/CAT` is a non-terminal unit, optionally named with `=name`.
//! * `IMP/CAT` or `IMP/CAT+refinement` is an implicit child.
//! * `*name/CAT` is a remote edge from the enclosing unit to a named node.
//! * `word@k/CAT` places the terminal at token position `k`; when used, every
//!   terminal must carry a position. This allows discontinuous units.
//!
//! Top-level items hang from the root.

use std::collections::HashMap;

use thiserror::Error;

use crate::graph::{validate, Edge, EdgeAttr, EdgeLabel, Graph, Node, NodeId, NodeKind, Span};

use super::Document;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BracketError {
    #[error("unexpected {0:?}")]
    Unexpected(String),
    #[error("unbalanced brackets")]
    Unbalanced,
    #[error("bad label in {0:?}")]
    BadLabel(String),
    #[error("unknown name {0:?}")]
    UnknownName(String),
    #[error("duplicate name {0:?}")]
    DuplicateName(String),
    #[error("token positions must be given for all terminals or none, and form 0..n")]
    BadPositions,
    #[error("resulting graph is invalid: {0}")]
    Invalid(String),
}

#[derive(Debug)]
enum Lexeme {
    Open,
    Close { label: EdgeLabel, name: Option<String> },
    Token { word: String, pos: Option<usize>, label: EdgeLabel, name: Option<String> },
    Implicit { label: EdgeLabel },
    Remote { target: String, label: EdgeLabel },
}

fn label_and_name(s: &str, whole: &str) -> Result<(EdgeLabel, Option<String>), BracketError> {
    let (label, name) = match s.split_once('=') {
        Some((l, n)) => (l, Some(n.to_string())),
        None => (s, None),
    };
    let label = label
        .parse()
        .map_err(|_| BracketError::BadLabel(whole.to_string()))?;
    Ok((label, name))
}

fn lex_item(piece: &str) -> Result<Lexeme, BracketError> {
    let (head, tail) = piece
        .rsplit_once('/')
        .ok_or_else(|| BracketError::Unexpected(piece.to_string()))?;
    let (label, name) = label_and_name(tail, piece)?;
    if head == "IMP" {
        return Ok(Lexeme::Implicit { label });
    }
    if let Some(target) = head.strip_prefix('*') {
        return Ok(Lexeme::Remote {
            target: target.to_string(),
            label,
        });
    }
    let (word, pos) = match head.rsplit_once('@') {
        Some((w, p)) if !w.is_empty() && p.chars().all(|c| c.is_ascii_digit()) && !p.is_empty() => {
            (w.to_string(), Some(p.parse().unwrap()))
        }
        _ => (head.to_string(), None),
    };
    if word.is_empty() {
        return Err(BracketError::Unexpected(piece.to_string()));
    }
    Ok(Lexeme::Token {
        word,
        pos,
        label,
        name,
    })
}

fn lex(src: &str) -> Result<Vec<Lexeme>, BracketError> {
    let mut out = Vec::new();
    for piece in src.split_whitespace() {
        let mut rest = piece;
        while let Some(r) = rest.strip_prefix('[') {
            out.push(Lexeme::Open);
            rest = r;
        }
        let mut parts = rest.split(']');
        let first = parts.next().unwrap_or("");
        if !first.is_empty() {
            out.push(lex_item(first)?);
        }
        for close in parts {
            let tail = close
                .strip_prefix('/')
                .ok_or_else(|| BracketError::BadLabel(piece.to_string()))?;
            let (label, name) = label_and_name(tail, piece)?;
            out.push(Lexeme::Close { label, name });
        }
    }
    Ok(out)
}

enum Tree {
    Unit { children: Vec<(EdgeLabel, Tree)>, name: Option<String>, remotes: Vec<(String, EdgeLabel)> },
    Token { word: String, pos: Option<usize>, name: Option<String> },
    Implicit,
}

fn parse_items(
    lexemes: &mut std::iter::Peekable<std::vec::IntoIter<Lexeme>>,
    nested: bool,
) -> Result<(Vec<(EdgeLabel, Tree)>, Vec<(String, EdgeLabel)>, Option<(EdgeLabel, Option<String>)>), BracketError> {
    let mut children = Vec::new();
    let mut remotes = Vec::new();
    while let Some(lx) = lexemes.next() {
        match lx {
            Lexeme::Open => {
                let (inner, inner_remotes, close) = parse_items(lexemes, true)?;
                let (label, name) = close.ok_or(BracketError::Unbalanced)?;
                children.push((
                    label,
                    Tree::Unit {
                        children: inner,
                        name,
                        remotes: inner_remotes,
                    },
                ));
            }
            Lexeme::Close { label, name } => {
                if !nested {
                    return Err(BracketError::Unbalanced);
                }
                return Ok((children, remotes, Some((label, name))));
            }
            Lexeme::Token {
                word,
                pos,
                label,
                name,
            } => children.push((label, Tree::Token { word, pos, name })),
            Lexeme::Implicit { label } => children.push((label, Tree::Implicit)),
            Lexeme::Remote { target, label } => remotes.push((target, label)),
        }
    }
    if nested {
        Err(BracketError::Unbalanced)
    } else {
        Ok((children, remotes, None))
    }
}

struct Assembler {
    words: Vec<(String, Option<usize>)>,
    // preorder ids for non-terminals and implicit nodes, resolved to final
    // ids once the terminal count is known
    inner: Vec<NodeKind>,
    edges: Vec<(Ref, Ref, EdgeLabel, EdgeAttr)>,
    names: HashMap<String, Ref>,
    remotes: Vec<(Ref, String, EdgeLabel)>,
}

#[derive(Clone, Copy)]
enum Ref {
    Root,
    Word(usize),
    Inner(usize),
}

impl Assembler {
    fn name(&mut self, name: Option<String>, r: Ref) -> Result<(), BracketError> {
        if let Some(n) = name {
            if self.names.insert(n.clone(), r).is_some() {
                return Err(BracketError::DuplicateName(n));
            }
        }
        Ok(())
    }

    fn walk(&mut self, parent: Ref, children: Vec<(EdgeLabel, Tree)>, remotes: Vec<(String, EdgeLabel)>) -> Result<(), BracketError> {
        for (target, label) in remotes {
            self.remotes.push((parent, target, label));
        }
        for (label, child) in children {
            match child {
                Tree::Token { word, pos, name } => {
                    let r = Ref::Word(self.words.len());
                    self.words.push((word, pos));
                    self.name(name, r)?;
                    self.edges.push((parent, r, label, EdgeAttr::Primary));
                }
                Tree::Implicit => {
                    let r = Ref::Inner(self.inner.len());
                    self.inner.push(NodeKind::Implicit);
                    self.edges.push((parent, r, label, EdgeAttr::Implicit));
                }
                Tree::Unit {
                    children,
                    name,
                    remotes,
                } => {
                    let r = Ref::Inner(self.inner.len());
                    self.inner.push(NodeKind::NonTerminal);
                    self.name(name, r)?;
                    self.edges.push((parent, r, label, EdgeAttr::Primary));
                    self.walk(r, children, remotes)?;
                }
            }
        }
        Ok(())
    }
}

/// Parses bracketed notation into a validated document.
pub fn parse_bracketed(id: &str, src: &str) -> Result<Document, BracketError> {
    let mut lexemes = lex(src)?.into_iter().peekable();
    let (children, remotes, _) = parse_items(&mut lexemes, false)?;
    let mut asm = Assembler {
        words: Vec::new(),
        inner: Vec::new(),
        edges: Vec::new(),
        names: HashMap::new(),
        remotes: Vec::new(),
    };
    asm.walk(Ref::Root, children, remotes)?;

    let n = asm.words.len();
    let explicit = asm.words.iter().filter(|(_, p)| p.is_some()).count();
    // position of word i in the sentence
    let positions: Vec<usize> = if explicit == 0 {
        (0..n).collect()
    } else if explicit == n {
        let ps: Vec<usize> = asm.words.iter().map(|(_, p)| p.unwrap()).collect();
        let mut sorted = ps.clone();
        sorted.sort_unstable();
        if sorted != (0..n).collect::<Vec<_>>() {
            return Err(BracketError::BadPositions);
        }
        ps
    } else {
        return Err(BracketError::BadPositions);
    };

    let mut ordered = vec![String::new(); n];
    for (i, (w, _)) in asm.words.iter().enumerate() {
        ordered[positions[i]] = w.clone();
    }
    let mut nodes = Vec::with_capacity(n + 1 + asm.inner.len());
    let mut text = String::new();
    let mut tokens = Vec::with_capacity(n);
    for (i, w) in ordered.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        let from = text.chars().count();
        text.push_str(w);
        let span = Span {
            from,
            to: from + w.chars().count(),
        };
        tokens.push(span);
        nodes.push(Node {
            id: NodeId(i as u32),
            kind: NodeKind::Terminal {
                text: w.clone(),
                anchor: span,
            },
        });
    }
    let root = NodeId(n as u32);
    nodes.push(Node {
        id: root,
        kind: NodeKind::Root,
    });
    for (k, kind) in asm.inner.iter().enumerate() {
        nodes.push(Node {
            id: NodeId((n + 1 + k) as u32),
            kind: kind.clone(),
        });
    }
    let resolve = |r: Ref| match r {
        Ref::Root => root,
        Ref::Word(i) => NodeId(positions[i] as u32),
        Ref::Inner(k) => NodeId((n + 1 + k) as u32),
    };
    let mut edges: Vec<Edge> = asm
        .edges
        .iter()
        .map(|&(s, t, label, attr)| Edge {
            src: resolve(s),
            tgt: resolve(t),
            label,
            attr,
        })
        .collect();
    for (src, target, label) in &asm.remotes {
        let tgt = *asm
            .names
            .get(target)
            .ok_or_else(|| BracketError::UnknownName(target.clone()))?;
        edges.push(Edge {
            src: resolve(*src),
            tgt: resolve(tgt),
            label: *label,
            attr: EdgeAttr::Remote,
        });
    }
    let graph = Graph::new(nodes, edges, root).map_err(|e| BracketError::Invalid(e.to_string()))?;
    if let Some(v) = validate(&graph).first() {
        return Err(BracketError::Invalid(v.to_string()));
    }
    Ok(Document {
        id: id.to_string(),
        text,
        tokens,
        graph,
    })
}
