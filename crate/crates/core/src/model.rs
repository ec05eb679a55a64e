//! Greedy transition-based parser with a linear scorer.

pub mod features;
pub mod perceptron;
pub mod repair;

use std::path::Path;

use fnv::FnvHashMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::Document;
use crate::graph::{EdgeLabel, Graph};
use crate::metric::{evaluate_corpus, implicit_confusion, ConfusionMatrix, EvalReport, ImplicitCounting, MetricError};
use crate::oracle::{oracle_sequence, OracleConfig};
use crate::transitions::{max_steps, Action, ActionKind, ParserState, SystemKind, TransitionError};

use features::{extract_features, FeatureVector, HASH_BITS, TEMPLATES};
use perceptron::{argmax, AveragedPerceptron, LinearWeights, Scorer, TrainableScorer};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("model file version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("model was trained for the {model} system but {requested} was requested")]
    SystemMismatch { model: SystemKind, requested: SystemKind },
    #[error("model feature templates do not match this build")]
    Templates,
    #[error("bad action in model alphabet: {0}")]
    Alphabet(String),
    #[error("no trainable documents (all {0} oracle runs failed)")]
    NoTrainingData(usize),
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelFormat {
    #[default]
    Json,
    Binary,
}

impl std::str::FromStr for ModelFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ModelFormat::Json),
            "binary" | "bin" => Ok(ModelFormat::Binary),
            _ => Err(format!("unknown model format {s:?} (expected json or binary)")),
        }
    }
}

/// Serialized form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub system: SystemKind,
    pub hash_bits: u32,
    pub templates: Vec<String>,
    pub alphabet: Vec<String>,
    /// (feature id, per-class weights), sorted by feature id.
    pub weights: Vec<(u32, Vec<f32>)>,
}

impl ModelFile {
    pub fn to_bytes(&self, format: ModelFormat) -> Result<Vec<u8>, ModelError> {
        match format {
            ModelFormat::Json => serde_json::to_vec(self).map_err(|e| ModelError::Format(e.to_string())),
            ModelFormat::Binary => bincode::serialize(self).map_err(|e| ModelError::Format(e.to_string())),
        }
    }

    /// JSON files start with `{`; anything else is read as binary.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let file: ModelFile = if bytes.first() == Some(&b'{') {
            serde_json::from_slice(bytes).map_err(|e| ModelError::Format(e.to_string()))?
        } else {
            bincode::deserialize(bytes).map_err(|e| ModelError::Format(e.to_string()))?
        };
        if file.version != MODEL_VERSION {
            return Err(ModelError::Version {
                found: file.version,
                expected: MODEL_VERSION,
            });
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path, format: ModelFormat) -> Result<(), ModelError> {
        std::fs::write(path, self.to_bytes(format)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// A decoder-ready model: action alphabet plus frozen weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    system: SystemKind,
    alphabet: Vec<Action>,
    weights: LinearWeights,
}

/// Actions every alphabet contains so decoding can always make progress.
fn base_actions(system: SystemKind) -> Vec<Action> {
    let mut base = vec![Action::Shift, Action::Reduce, Action::Swap, Action::Finish];
    if system == SystemKind::ImplicitStandard {
        base.push(Action::NodeStandard);
    }
    base
}

/// Sorted by kind precedence, then by label string: the tie-break order.
fn sort_alphabet(actions: &mut Vec<Action>) {
    actions.sort_by_key(|a| (a.kind(), a.label().map(|l| l.trace_form())));
    actions.dedup();
}

impl Model {
    /// Zero weights over the base actions plus the given labels on every
    /// labelled action kind of the system.
    pub fn zero(system: SystemKind, labels: &[EdgeLabel]) -> Self {
        let mut alphabet = base_actions(system);
        for kind in ActionKind::ALL {
            if !kind.takes_label() || !kind.in_system(system) {
                continue;
            }
            alphabet.extend(labels.iter().filter_map(|&l| Action::with_label(kind, Some(l))));
        }
        sort_alphabet(&mut alphabet);
        let n = alphabet.len();
        Model {
            system,
            alphabet,
            weights: LinearWeights::zeros(n),
        }
    }

    pub fn system(&self) -> SystemKind {
        self.system
    }

    pub fn alphabet(&self) -> &[Action] {
        &self.alphabet
    }

    pub fn scorer(&self) -> &LinearWeights {
        &self.weights
    }

    pub fn to_file(&self) -> ModelFile {
        let mut weights: Vec<(u32, Vec<f32>)> = self.weights.rows.iter().map(|(&f, w)| (f, w.clone())).collect();
        weights.sort_by_key(|(f, _)| *f);
        ModelFile {
            version: MODEL_VERSION,
            system: self.system,
            hash_bits: HASH_BITS,
            templates: TEMPLATES.iter().map(|t| t.to_string()).collect(),
            alphabet: self.alphabet.iter().map(|a| a.to_string()).collect(),
            weights,
        }
    }

    /// Checks the file against this build and the requested system.
    pub fn from_file(file: ModelFile, requested: SystemKind) -> Result<Self, ModelError> {
        if file.system != requested {
            return Err(ModelError::SystemMismatch {
                model: file.system,
                requested,
            });
        }
        if file.hash_bits != HASH_BITS || file.templates.iter().map(String::as_str).ne(TEMPLATES) {
            return Err(ModelError::Templates);
        }
        let alphabet = file
            .alphabet
            .iter()
            .map(|s| s.parse::<Action>().map_err(ModelError::Alphabet))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(a) = alphabet.iter().find(|a| !a.kind().in_system(requested)) {
            return Err(ModelError::Alphabet(format!("{a} is not a {requested} action")));
        }
        let n = alphabet.len();
        let mut rows = FnvHashMap::default();
        for (f, w) in file.weights {
            if w.len() != n {
                return Err(ModelError::Format(format!("feature {f} has {} weights, expected {n}", w.len())));
            }
            rows.insert(f, w);
        }
        Ok(Model {
            system: requested,
            alphabet,
            weights: LinearWeights { n_classes: n, rows },
        })
    }

    /// Alphabet indices of actions legal in `st`, in tie-break order.
    pub fn legal_indices(&self, st: &ParserState) -> Result<Vec<usize>, TransitionError> {
        let kinds = st.legal_kinds()?;
        Ok(legal_indices(&self.alphabet, &kinds, st))
    }

    /// The action the model picks in `st`, or `None` when no alphabet action
    /// is legal.
    pub fn predict(&self, st: &ParserState) -> Result<Option<Action>, TransitionError> {
        let legal = self.legal_indices(st)?;
        let scores = self.weights.scores(&extract_features(st));
        Ok(argmax(&scores, &legal).map(|i| self.alphabet[i]))
    }
}

fn legal_indices(alphabet: &[Action], kinds: &[ActionKind], st: &ParserState) -> Vec<usize> {
    alphabet
        .iter()
        .enumerate()
        .filter(|(_, a)| {
            kinds.contains(&a.kind()) && (a.label().is_none_or(|l| l.refinement.is_none()) || st.check(a).is_ok())
        })
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainConfig {
    pub system: SystemKind,
    pub epochs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub states: usize,
    pub mistakes: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub system: String,
    pub documents: usize,
    pub skipped: Vec<String>,
    pub alphabet_size: usize,
    pub epochs: Vec<EpochStats>,
}

/// One oracle state, precomputed once since static-oracle states do not
/// depend on the weights.
struct Instance {
    features: FeatureVector,
    legal: Vec<usize>,
    gold: usize,
}

fn oracle_instances(doc: &Document, actions: &[Action], system: SystemKind, alphabet: &[Action]) -> Result<Vec<Instance>, TransitionError> {
    let mut st = ParserState::for_graph(system, &doc.graph)?;
    let mut out = Vec::with_capacity(actions.len());
    for a in actions {
        let kinds = st.legal_kinds()?;
        let gold = alphabet.iter().position(|x| x == a).expect("alphabet covers oracle actions");
        out.push(Instance {
            features: extract_features(&st),
            legal: legal_indices(alphabet, &kinds, &st),
            gold,
        });
        st.apply(a)?;
    }
    Ok(out)
}

/// Averaged-perceptron training on static-oracle action sequences.
pub fn train(docs: &[Document], cfg: &TrainConfig) -> Result<(Model, TrainReport), ModelError> {
    let oracle = OracleConfig::new(cfg.system);
    let sequences: Vec<_> = docs
        .par_iter()
        .map(|d| oracle_sequence(&d.graph, &oracle))
        .collect();
    let mut skipped = Vec::new();
    let mut usable = Vec::new();
    for (doc, seq) in docs.iter().zip(sequences) {
        match seq {
            Ok(seq) => usable.push((doc, seq)),
            Err(e) => {
                log::warn!("skipping {}: {}", doc.id, e.to_string().lines().next().unwrap_or(""));
                skipped.push(doc.id.clone());
            }
        }
    }
    if usable.is_empty() && !docs.is_empty() {
        return Err(ModelError::NoTrainingData(docs.len()));
    }

    let mut alphabet = base_actions(cfg.system);
    alphabet.extend(usable.iter().flat_map(|(_, seq)| seq.iter().copied()));
    sort_alphabet(&mut alphabet);

    let instances: Vec<Vec<Instance>> = usable
        .par_iter()
        .map(|(doc, seq)| oracle_instances(doc, seq, cfg.system, &alphabet))
        .collect::<Result<_, _>>()?;

    let mut perceptron = AveragedPerceptron::new(alphabet.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut states, mut mistakes) = (0, 0);
        for &d in &order {
            for inst in &instances[d] {
                let guess = argmax(&perceptron.scores(&inst.features), &inst.legal).unwrap_or(inst.gold);
                if guess != inst.gold {
                    perceptron.update(&inst.features, inst.gold, guess);
                    mistakes += 1;
                }
                perceptron.tick();
                states += 1;
            }
        }
        let accuracy = if states == 0 {
            1.0
        } else {
            1.0 - mistakes as f64 / states as f64
        };
        log::info!("epoch {epoch}: {mistakes} mistakes over {states} states ({:.2}%)", 100.0 * accuracy);
        epochs.push(EpochStats {
            epoch,
            states,
            mistakes,
            accuracy,
        });
    }

    let weights = if cfg.epochs == 0 {
        LinearWeights::zeros(alphabet.len())
    } else {
        perceptron.averaged()
    };
    let report = TrainReport {
        system: cfg.system.to_string(),
        documents: usable.len(),
        skipped,
        alphabet_size: alphabet.len(),
        epochs,
    };
    Ok((
        Model {
            system: cfg.system,
            alphabet,
            weights,
        },
        report,
    ))
}

/// Fraction of oracle states where the model picks the gold action.
pub fn action_accuracy(model: &Model, docs: &[Document]) -> Result<f64, ModelError> {
    let oracle = OracleConfig::new(model.system);
    let (mut right, mut total) = (0usize, 0usize);
    for doc in docs {
        let Ok(seq) = oracle_sequence(&doc.graph, &oracle) else {
            continue;
        };
        let mut st = ParserState::for_graph(model.system, &doc.graph)?;
        for a in &seq {
            total += 1;
            if model.predict(&st)? == Some(*a) {
                right += 1;
            }
            st.apply(a)?;
        }
    }
    Ok(if total == 0 { 1.0 } else { right as f64 / total as f64 })
}

#[derive(Debug, Clone)]
pub struct ParseOutput {
    pub graph: Graph,
    pub trace: Vec<Action>,
    /// The step limit was hit and the state was driven to Finish.
    pub guard_triggered: bool,
    /// Fixes applied to make the extracted graph valid.
    pub repairs: Vec<String>,
}

fn decode(model: &Model, mut st: ParserState) -> Result<ParseOutput, ModelError> {
    let limit = max_steps(st.n_tokens());
    let mut guard_triggered = false;
    while !st.is_terminal() {
        if st.history().len() >= limit {
            log::warn!("step limit {limit} reached; forcing finish");
            guard_triggered = true;
            st.force_finish();
            break;
        }
        match model.predict(&st)? {
            Some(a) => st.apply(&a)?,
            None => {
                log::warn!("no legal action in the model alphabet; forcing finish");
                guard_triggered = true;
                st.force_finish();
            }
        }
    }
    let (graph, repairs) = repair::repair(st.extract_graph()?);
    for r in &repairs {
        log::debug!("repair: {r}");
    }
    Ok(ParseOutput {
        graph,
        trace: st.history().to_vec(),
        guard_triggered,
        repairs,
    })
}

/// Parses whitespace-separated tokens.
pub fn parse_tokens<S: AsRef<str>>(model: &Model, tokens: &[S]) -> Result<ParseOutput, ModelError> {
    decode(model, ParserState::new(model.system, tokens)?)
}

/// Parses the tokens of a document, keeping its anchors and id.
pub fn parse_document(model: &Model, doc: &Document) -> Result<(Document, ParseOutput), ModelError> {
    let out = decode(model, ParserState::for_graph(model.system, &doc.graph)?)?;
    let parsed = Document {
        id: doc.id.clone(),
        text: doc.text.clone(),
        tokens: doc.tokens.clone(),
        graph: out.graph.clone(),
    };
    Ok((parsed, out))
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelEvaluation {
    #[serde(flatten)]
    pub metrics: EvalReport,
    pub confusion: ConfusionMatrix,
    pub guard_triggered: usize,
    pub repaired: usize,
}

/// Parses every gold document and scores the predictions against it.
pub fn evaluate_model(model: &Model, gold: &[Document], counting: ImplicitCounting) -> Result<(ModelEvaluation, Vec<Document>), ModelError> {
    let parsed = gold
        .par_iter()
        .map(|d| parse_document(model, d))
        .collect::<Result<Vec<_>, _>>()?;
    let mut confusion = ConfusionMatrix::new();
    let (mut guard_triggered, mut repaired) = (0, 0);
    for (g, (p, out)) in gold.iter().zip(&parsed) {
        confusion.merge(&implicit_confusion(&g.graph, &p.graph)?);
        guard_triggered += out.guard_triggered as usize;
        repaired += !out.repairs.is_empty() as usize;
    }
    let predictions: Vec<Document> = parsed.into_iter().map(|(d, _)| d).collect();
    let metrics = evaluate_corpus(gold, &predictions, counting)?;
    Ok((
        ModelEvaluation {
            metrics,
            confusion,
            guard_triggered,
            repaired,
        },
        predictions,
    ))
}
