//! Writes the synthetic split files used by the corpus statistics tests.
//!
//! Each split reproduces the published sentence, token, node and per-type
//! implicit counts of the revisited corpus. Words and unit structure are
//! filler.
//!
//! ```text
//! cargo run --example gen_stats_fixture -- crates/core/tests/fixtures
//! ```

use std::path::PathBuf;

use anyhow::{ensure, Context, Result};
use ucca_implicit::codec::{bracket::parse_bracketed, corpus_stats, write_jsonl};

const REFINEMENTS: [&str; 6] = [
    "deictic",
    "generic",
    "genre-based",
    "type-identifiable",
    "non-specific",
    "iterated-set",
];

const WORDS: [&str; 12] = [
    "service", "was", "great", "staff", "friendly", "prices", "fair", "food", "tasty", "would", "recommend", "again",
];

struct Split {
    name: &'static str,
    sentences: usize,
    tokens: usize,
    nodes: usize,
    implicit: [usize; 6],
}

const SPLITS: [Split; 3] = [
    Split {
        name: "train",
        sentences: 285,
        tokens: 2671,
        nodes: 3936,
        implicit: [87, 59, 103, 3, 18, 4],
    },
    Split {
        name: "dev",
        sentences: 59,
        tokens: 540,
        nodes: 781,
        implicit: [11, 15, 19, 1, 10, 0],
    },
    Split {
        name: "eval",
        sentences: 49,
        tokens: 489,
        nodes: 709,
        implicit: [9, 12, 25, 2, 8, 5],
    },
];

/// `total` spread over `parts` as evenly as possible, larger shares first.
fn spread(total: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|i| total / parts + usize::from(i < total % parts)).collect()
}

fn sentence(tokens: usize, units: usize, implicit: &[&str], word: &mut usize) -> String {
    let mut items = Vec::new();
    let mut next_imp = implicit.iter();
    let per_unit = spread(tokens, units);
    let imp_per_unit = spread(implicit.len(), units);
    for (u, (&n_tok, &n_imp)) in per_unit.iter().zip(&imp_per_unit).enumerate() {
        let mut parts = Vec::new();
        for t in 0..n_tok {
            let w = WORDS[*word % WORDS.len()];
            *word += 1;
            parts.push(format!("{w}/{}", if t == 0 { "P" } else { "A" }));
        }
        for _ in 0..n_imp {
            parts.push(format!("IMP/A+{}", next_imp.next().expect("implicit units left")));
        }
        items.push(format!("[{}]/{}", parts.join(" "), if u == 0 { "H" } else { "A" }));
    }
    // later units nest under the first so every sentence is one scene
    let (first, rest) = items.split_first().expect("at least one unit");
    if rest.is_empty() {
        first.clone()
    } else {
        let inner = first.trim_end_matches("/H").trim_end_matches(']');
        format!("{inner} {}]/H", rest.join(" "))
    }
}

fn generate(split: &Split) -> Result<String> {
    let n_imp: usize = split.implicit.iter().sum();
    let units = split.nodes - split.tokens - split.sentences - n_imp;
    let labels: Vec<&str> = REFINEMENTS
        .iter()
        .zip(split.implicit)
        .flat_map(|(r, n)| std::iter::repeat_n(*r, n))
        .collect();
    let tok = spread(split.tokens, split.sentences);
    let unit = spread(units, split.sentences);
    let imp = spread(n_imp, split.sentences);
    let mut docs = Vec::new();
    let mut offset = 0;
    let mut word = 0;
    for i in 0..split.sentences {
        ensure!(unit[i] >= 1 && unit[i] <= tok[i], "sentence {i} cannot hold {} units", unit[i]);
        let src = sentence(tok[i], unit[i], &labels[offset..offset + imp[i]], &mut word);
        offset += imp[i];
        let id = format!("{}{:03}.{}", split.name, i / 3, i % 3 + 1);
        docs.push(parse_bracketed(&id, &src).with_context(|| format!("{id}: {src}"))?);
    }
    let stats = corpus_stats(&docs);
    ensure!(stats.sentences == split.sentences && stats.tokens == split.tokens, "size mismatch");
    ensure!(stats.nodes == split.nodes, "node count {} != {}", stats.nodes, split.nodes);
    ensure!(stats.by_refinement() == split.implicit, "implicit counts {:?}", stats.by_refinement());
    Ok(write_jsonl(&docs)?)
}

fn main() -> Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/tests/fixtures".into()));
    for split in &SPLITS {
        let path = dir.join(format!("stats_{}.jsonl", split.name));
        std::fs::write(&path, generate(split)?).with_context(|| format!("cannot write {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
