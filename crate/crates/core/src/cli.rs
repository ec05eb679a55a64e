//! Command-line interface: one binary with subcommands.
//!
//! Exit codes: 0 success, 1 validation or threshold failure, 2 usage or I/O
//! error.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::codec::{
    bracket::parse_bracketed, corpus_stats, read_document, read_jsonl, write_document, write_document_pretty,
    CodecError, CorpusStats, Document,
};
use crate::graph::{EdgeAttr, Graph, NodeKind};
use crate::metric::{agreement_report, evaluate_corpus, ImplicitCounting};
use crate::model::{evaluate_model, parse_document, train, Model, ModelFile, ModelFormat, TrainConfig};
use crate::oracle::{oracle_sequence, verify_roundtrip, OracleConfig};
use crate::transitions::{format_trace, SystemKind};

#[derive(Debug, Parser)]
#[command(name = "ucca-implicit", version, about = "Parse and evaluate UCCA graphs with implicit arguments")]
pub struct Cli {
    /// Worker threads for per-document work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemArg {
    Eager,
    Standard,
}

impl From<SystemArg> for SystemKind {
    fn from(s: SystemArg) -> Self {
        match s {
            SystemArg::Eager => SystemKind::ImplicitEager,
            SystemArg::Standard => SystemKind::ImplicitStandard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConvertTarget {
    /// One compact document per line.
    Jsonl,
    /// A pretty-printed JSON array.
    Pretty,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check documents against the schema and the graph rules.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Corpus statistics as JSON.
    Stats {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Score predictions (or a model's parses) against gold graphs.
    Evaluate(EvaluateArgs),
    /// Check that the oracle reproduces every gold graph.
    OracleCheck {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Check one system only (default: both).
        #[arg(long, value_enum)]
        system: Option<SystemArg>,
        /// Write one action trace per document and system into this directory.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
    /// Train an averaged-perceptron parser.
    Train {
        train: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "standard")]
        system: SystemArg,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        model_format: FormatArg,
    },
    /// Parse tokenized text (one sentence per line) or a JSON Lines corpus.
    Parse {
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "standard")]
        system: SystemArg,
        /// Output file (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write one Graphviz file per sentence into this directory.
        #[arg(long)]
        emit_dot: Option<PathBuf>,
        /// Write the action trace of each sentence into this directory.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
    /// Convert between JSON Lines, pretty JSON and bracketed notation.
    Convert {
        input: PathBuf,
        /// Output format (default: pretty for JSON Lines input, otherwise jsonl).
        #[arg(long, value_enum)]
        to: Option<ConvertTarget>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub gold: PathBuf,
    /// Predicted graphs aligned with the gold file.
    #[arg(required_unless_present = "model", conflicts_with = "model")]
    pub pred: Option<PathBuf>,
    /// Parse the gold tokens with this model instead of reading predictions.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "standard")]
    pub system: SystemArg,
    /// Count implicit units individually instead of per parent group.
    #[arg(long)]
    pub unit_level_metric: bool,
    /// Report only labelled implicit scores.
    #[arg(long)]
    pub labelled_only: bool,
    /// Include the implicit label confusion matrix and Cohen's kappa.
    #[arg(long)]
    pub agreement: bool,
    /// Exit with status 1 when labelled implicit F1 is below this value.
    #[arg(long)]
    pub min_implicit_f1: Option<f64>,
}

/// Failures that map to exit status 1 rather than 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct CheckFailed(pub String);

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<CheckFailed>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { paths } => cmd_validate(&paths),
        Command::Stats { paths } => cmd_stats(&paths),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::OracleCheck {
            paths,
            system,
            trace_dir,
        } => cmd_oracle_check(&paths, system, trace_dir.as_deref()),
        Command::Train {
            train,
            model,
            system,
            epochs,
            seed,
            model_format,
        } => cmd_train(&train, &model, system.into(), epochs, seed, model_format),
        Command::Parse {
            input,
            model,
            system,
            output,
            emit_dot,
            trace_dir,
        } => cmd_parse(&input, &model, system.into(), output.as_deref(), emit_dot.as_deref(), trace_dir.as_deref()),
        Command::Convert { input, to, output } => cmd_convert(&input, to, output.as_deref()),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Reads a corpus in any supported layout, failing on the first bad
/// document.
pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    let text = read_text(path)?;
    parse_any(&text).with_context(|| format!("in {}", path.display()))
}

fn parse_any(text: &str) -> Result<Vec<Document>> {
    match text.trim_start().chars().next() {
        None => Ok(Vec::new()),
        Some('{') => read_jsonl(text)
            .into_iter()
            .map(|r| r.map_err(anyhow::Error::from))
            .collect(),
        Some('[') => {
            let values: Vec<serde_json::Value> = serde_json::from_str(text).context("malformed JSON array")?;
            values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    read_document(&serde_json::to_vec(v)?).with_context(|| format!("document {}", i + 1))
                })
                .collect()
        }
        Some(_) => parse_bracketed_lines(text),
    }
}

/// `id<TAB>bracketed graph` lines; blank lines and `#` comments skipped.
fn parse_bracketed_lines(text: &str) -> Result<Vec<Document>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            let (id, src) = l
                .split_once('\t')
                .with_context(|| format!("line {}: expected id<TAB>graph", i + 1))?;
            parse_bracketed(id, src).with_context(|| format!("line {}", i + 1))
        })
        .collect()
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    emit(None, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn cmd_validate(paths: &[PathBuf]) -> Result<()> {
    let mut bad = 0;
    let mut total = 0;
    let mut listing = String::new();
    for path in paths {
        let text = read_text(path)?;
        for result in read_jsonl(&text) {
            total += 1;
            let Err(e) = result else { continue };
            bad += 1;
            match &e.error {
                CodecError::Invalid(violations) => {
                    for v in violations {
                        let _ = writeln!(listing, "{}:{}: {v}", path.display(), e.line);
                    }
                }
                other => {
                    let _ = writeln!(listing, "{}:{}: {other}", path.display(), e.line);
                }
            }
        }
    }
    emit(None, &listing)?;
    eprintln!("{total} documents, {bad} invalid");
    if bad > 0 {
        bail!(CheckFailed(format!("{bad} of {total} documents failed validation")));
    }
    Ok(())
}

#[derive(Serialize)]
struct SplitStats<'a> {
    path: String,
    #[serde(flatten)]
    stats: &'a CorpusStats,
}

#[derive(Serialize)]
struct MultiStats<'a> {
    splits: Vec<SplitStats<'a>>,
    total: CorpusStats,
}

fn cmd_stats(paths: &[PathBuf]) -> Result<()> {
    let per_file = paths
        .iter()
        .map(|p| Ok(corpus_stats(&load_corpus(p)?)))
        .collect::<Result<Vec<_>>>()?;
    if per_file.len() == 1 {
        return print_json(&per_file[0]);
    }
    let total = per_file.iter().fold(CorpusStats::default(), |mut acc, s| {
        acc += s;
        acc
    });
    print_json(&MultiStats {
        splits: paths
            .iter()
            .zip(&per_file)
            .map(|(p, stats)| SplitStats {
                path: p.display().to_string(),
                stats,
            })
            .collect(),
        total,
    })
}

fn load_model(path: &Path, system: SystemKind) -> Result<Model> {
    let file = ModelFile::load(path).with_context(|| format!("cannot load model {}", path.display()))?;
    Ok(Model::from_file(file, system)?)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let gold = load_corpus(&args.gold)?;
    let counting = if args.unit_level_metric {
        ImplicitCounting::Unit
    } else {
        ImplicitCounting::Group
    };
    let (pred, extra) = match (&args.pred, &args.model) {
        (Some(p), _) => (load_corpus(p)?, None),
        (None, Some(m)) => {
            let model = load_model(m, args.system.into())?;
            let (eval, pred) = evaluate_model(&model, &gold, counting)?;
            (pred, Some((eval.guard_triggered, eval.repaired)))
        }
        (None, None) => unreachable!("clap requires a prediction source"),
    };
    let report = evaluate_corpus(&gold, &pred, counting)?;
    let mut value = if args.labelled_only {
        serde_json::json!({ "implicit_labelled": report.implicit_labelled })
    } else {
        serde_json::to_value(&report)?
    };
    if let Some((guard, repaired)) = extra {
        value["guard_triggered"] = guard.into();
        value["repaired"] = repaired.into();
    }
    if args.agreement {
        let agreement = agreement_report(&gold, &pred)?;
        value["confusion"] = serde_json::to_value(&agreement.confusion)?;
        value["kappa"] = serde_json::to_value(agreement.kappa)?;
    }
    print_json(&value)?;
    if let Some(min) = args.min_implicit_f1 {
        let f = report.implicit_labelled.f1;
        if f < min {
            bail!(CheckFailed(format!("labelled implicit F1 {f:.4} is below {min}")));
        }
    }
    Ok(())
}

fn cmd_oracle_check(paths: &[PathBuf], system: Option<SystemArg>, trace_dir: Option<&Path>) -> Result<()> {
    let mut docs = Vec::new();
    for p in paths {
        docs.extend(load_corpus(p)?);
    }
    let systems: Vec<SystemKind> = match system {
        Some(s) => vec![s.into()],
        None => vec![SystemKind::ImplicitEager, SystemKind::ImplicitStandard],
    };
    let mut failed = Vec::new();
    for sys in systems {
        let cfg = OracleConfig::new(sys);
        let report = verify_roundtrip(&docs, &cfg);
        println!("{report}");
        if report.coverage() < 100.0 {
            failed.push(sys.to_string());
        }
        if let Some(dir) = trace_dir {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            for doc in &docs {
                if let Ok(seq) = oracle_sequence(&doc.graph, &cfg) {
                    let path = dir.join(format!("{}.{sys}.trace", doc.id));
                    fs::write(&path, format_trace(&seq)).with_context(|| format!("cannot write {}", path.display()))?;
                }
            }
        }
    }
    if !failed.is_empty() {
        bail!(CheckFailed(format!("round-trip below 100% for {}", failed.join(", "))));
    }
    Ok(())
}

fn cmd_train(path: &Path, model_path: &Path, system: SystemKind, epochs: usize, seed: u64, format: FormatArg) -> Result<()> {
    let docs = load_corpus(path)?;
    let cfg = TrainConfig { system, epochs, seed };
    let (model, report) = train(&docs, &cfg)?;
    let format = match format {
        FormatArg::Json => ModelFormat::Json,
        FormatArg::Binary => ModelFormat::Binary,
    };
    model
        .to_file()
        .save(model_path, format)
        .with_context(|| format!("cannot write model {}", model_path.display()))?;
    print_json(&report)
}

/// Documents from JSON input, or one document per line of tokenized text.
fn parse_input(text: &str) -> Result<Vec<Document>> {
    match text.trim_start().chars().next() {
        Some('{') | Some('[') => parse_any(text),
        _ => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let tokens: Vec<&str> = l.split_whitespace().collect();
                let mut b = crate::graph::GraphBuilder::new(&tokens);
                let root = b.root();
                for t in 0..tokens.len() {
                    let v = b.terminal(t);
                    b.edge(root, v, "H");
                }
                let graph = b.build();
                let text = tokens.join(" ");
                let spans = graph
                    .nodes()
                    .iter()
                    .filter_map(|n| match &n.kind {
                        NodeKind::Terminal { anchor, .. } => Some(*anchor),
                        _ => None,
                    })
                    .collect();
                Ok(Document {
                    id: format!("line{}", i + 1),
                    text,
                    tokens: spans,
                    graph,
                })
            })
            .collect(),
    }
}

fn cmd_parse(
    input: &Path,
    model_path: &Path,
    system: SystemKind,
    output: Option<&Path>,
    dot_dir: Option<&Path>,
    trace_dir: Option<&Path>,
) -> Result<()> {
    let model = load_model(model_path, system)?;
    let docs = parse_input(&read_text(input)?).with_context(|| format!("in {}", input.display()))?;
    let parsed = docs
        .par_iter()
        .map(|d| parse_document(&model, d))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::new();
    for (doc, result) in &parsed {
        if result.guard_triggered {
            log::warn!("{}: step limit reached, parse was forced to finish", doc.id);
        }
        out.push_str(std::str::from_utf8(&write_document(doc)?)?);
        out.push('\n');
    }
    emit(output, &out)?;
    for (dir, ext) in [(dot_dir, "dot"), (trace_dir, "trace")] {
        let Some(dir) = dir else { continue };
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for (doc, result) in &parsed {
            let body = if ext == "dot" {
                to_dot(&doc.id, &doc.graph)
            } else {
                format_trace(&result.trace)
            };
            let path = dir.join(format!("{}.{ext}", doc.id));
            fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    Ok(())
}

fn cmd_convert(input: &Path, to: Option<ConvertTarget>, output: Option<&Path>) -> Result<()> {
    let text = read_text(input)?;
    let docs = parse_any(&text).with_context(|| format!("in {}", input.display()))?;
    let jsonl_input = text.trim_start().starts_with('{');
    let target = to.unwrap_or(if jsonl_input {
        ConvertTarget::Pretty
    } else {
        ConvertTarget::Jsonl
    });
    let body = match target {
        ConvertTarget::Jsonl => {
            let mut s = String::new();
            for d in &docs {
                s.push_str(std::str::from_utf8(&write_document(d)?)?);
                s.push('\n');
            }
            s
        }
        ConvertTarget::Pretty => {
            let parts = docs
                .iter()
                .map(write_document_pretty)
                .collect::<Result<Vec<_>, _>>()?;
            let indented: Vec<String> = parts
                .iter()
                .map(|p| p.lines().map(|l| format!("  {l}")).collect::<Vec<_>>().join("\n"))
                .collect();
            if indented.is_empty() {
                "[]\n".to_string()
            } else {
                format!("[\n{}\n]\n", indented.join(",\n"))
            }
        }
    };
    emit(output, &body)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: terminals as boxes in sentence order, remote edges
/// dashed, implicit edges bold.
pub fn to_dot(id: &str, g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", dot_escape(id));
    let _ = writeln!(out, "  node [shape=circle, label=\"\", width=0.15];");
    for n in g.nodes() {
        match &n.kind {
            NodeKind::Terminal { text, .. } => {
                let _ = writeln!(out, "  n{} [shape=box, width=0, label=\"{}\"];", n.id, dot_escape(text));
            }
            NodeKind::Implicit => {
                let _ = writeln!(out, "  n{} [shape=box, width=0, style=dashed, label=\"IMP\"];", n.id);
            }
            NodeKind::Root => {
                let _ = writeln!(out, "  n{} [style=filled, fillcolor=black];", n.id);
            }
            NodeKind::NonTerminal => {
                let _ = writeln!(out, "  n{};", n.id);
            }
        }
    }
    let terminals: Vec<String> = (0..g.n_terminals()).map(|i| format!("n{i}")).collect();
    if !terminals.is_empty() {
        let _ = writeln!(out, "  {{ rank=same; {} }}", terminals.join("; "));
    }
    let mut edges: Vec<_> = g.edges().to_vec();
    edges.sort();
    for e in edges {
        let style = match e.attr {
            EdgeAttr::Primary => "solid",
            EdgeAttr::Remote => "dashed",
            EdgeAttr::Implicit => "bold",
        };
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{}\", style={style}];",
            e.src,
            e.tgt,
            dot_escape(&e.label.to_string())
        );
    }
    out.push_str("}\n");
    out
}
