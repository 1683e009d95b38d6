//! End-to-end runs: corpus, tuples, embeddings, probes and reports.
//!
//! Every written artifact carries a stamp `<config hash>/seed-<n>` (or just
//! the hash for seed-independent files). Inputs whose stamp names another
//! config hash are rejected; files with an empty stamp are accepted as is.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Language};
use crate::embeddings::{self, EmbeddingError, EmbeddingRecord, EmbeddingSet};
use crate::probe::{
    self, encode_cu_targets, encode_dcu_targets, evaluate_probe, split_samples, train_probe,
    EncodedTarget, ProbeConfig, ProbeError, ProbeTarget, ProbingReport,
};
use crate::records;
use crate::refmodel::{
    self, encode, init_encoder, train_encoder, EncoderConfig, EncoderError, EncoderParams,
};
use crate::report::{self, EmbeddingSource, ReportError, ReportRecord};
use crate::syntax::{parse_to_tree, split_statements, StatementLabels, SyntaxError, SyntaxTree};
use crate::tuples::{
    flowgraph_to_dcu, statement_trees_to_dcu, tree_to_cu, tree_to_dcu, write_cu_tuples,
    write_tuples, CuRecord, DcuTuple, TupleError, TupleFileError, TupleKind, TupleRecord,
};
use crate::validation::{
    probe_differential, validate_embeddings, validate_representation, SimilarityOptions,
    ValidationError,
};
use crate::vocab::{VocabError, Vocabulary};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "SYNTAXPROBE_OUTPUT_DIR";

/// Layer name of reference encoder embeddings.
pub const ENCODER_LAYER: &str = "output";
pub const ENCODER_SOURCE: &str = "reference-encoder";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("sample {sample_id}: {source}")]
    Syntax {
        sample_id: String,
        source: SyntaxError,
    },
    #[error("sample {sample_id}: {source}")]
    Tuple {
        sample_id: String,
        source: TupleError,
    },
    #[error("sample {0} has no flow graph")]
    MissingGraph(String),
    #[error(transparent)]
    TupleFile(#[from] TupleFileError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{artifact} was produced by config {found}, this run is {expected}")]
    StampMismatch {
        artifact: String,
        expected: String,
        found: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Stable name of the failing stage, for machine-readable error records.
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Corpus(_) => "corpus",
            PipelineError::Syntax { .. } => "parse",
            PipelineError::Tuple { .. }
            | PipelineError::MissingGraph(_)
            | PipelineError::TupleFile(_) => "tuples",
            PipelineError::Vocab(_) => "vocab",
            PipelineError::Encoder(_) => "encode",
            PipelineError::Embedding(_) => "embeddings",
            PipelineError::Probe(_) => "probe",
            PipelineError::Validation(_) => "validate",
            PipelineError::Report(_) => "report",
            PipelineError::StampMismatch { .. } => "stamp",
            PipelineError::Io(_) => "io",
        }
    }

    /// Variant name, e.g. `CapacityViolation` for probe capacity errors.
    pub fn kind(&self) -> String {
        let inner = match self {
            PipelineError::Corpus(e) => format!("{e:?}"),
            PipelineError::Syntax { source, .. } => format!("{source:?}"),
            PipelineError::Tuple { source, .. } => format!("{source:?}"),
            PipelineError::TupleFile(e) => format!("{e:?}"),
            PipelineError::Vocab(e) => format!("{e:?}"),
            PipelineError::Encoder(e) => format!("{e:?}"),
            PipelineError::Embedding(e) => format!("{e:?}"),
            PipelineError::Probe(e) => format!("{e:?}"),
            PipelineError::Validation(e) => format!("{e:?}"),
            PipelineError::Report(e) => format!("{e:?}"),
            other => format!("{other:?}"),
        };
        inner
            .split(|c: char| !c.is_alphanumeric())
            .next()
            .unwrap_or_default()
            .to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum CorpusSpec {
    Synthetic {
        seed: u64,
        n_pairs: usize,
        language: Language,
    },
    Files {
        samples: PathBuf,
        #[serde(default)]
        pairs: Option<PathBuf>,
        #[serde(default)]
        cfgs: Option<PathBuf>,
    },
}

/// Embedding files produced outside this tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalEmbeddings {
    pub trained: PathBuf,
    pub untrained: PathBuf,
    #[serde(default)]
    pub layer: Option<String>,
    /// Parameter count of the producing model, for the probe capacity rule.
    #[serde(default)]
    pub model_parameters: Option<usize>,
}

fn default_strategy() -> TupleKind {
    TupleKind::WholeTree
}

fn default_target() -> ProbeTarget {
    ProbeTarget::Cu
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

fn default_min_count() -> usize {
    1
}

fn default_test_fraction() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSpec,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_strategy")]
    pub strategy: TupleKind,
    /// Overrides `probe.target`.
    #[serde(default = "default_target")]
    pub target: ProbeTarget,
    /// Encoder, probe and split seed of each run.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_min_count")]
    pub min_count: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Accuracy gain the trained probe needs for the differential to pass.
    #[serde(default)]
    pub margin: f64,
    #[serde(default)]
    pub similarity: SimilarityOptions,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub embeddings: Option<ExternalEmbeddings>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn synthetic(seed: u64, n_pairs: usize, language: Language) -> Self {
        RunConfig {
            corpus: CorpusSpec::Synthetic {
                seed,
                n_pairs,
                language,
            },
            output_dir: None,
            strategy: default_strategy(),
            target: default_target(),
            seeds: default_seeds(),
            min_count: default_min_count(),
            test_fraction: default_test_fraction(),
            margin: 0.0,
            similarity: SimilarityOptions::default(),
            encoder: EncoderConfig::default(),
            probe: ProbeConfig::default(),
            embeddings: None,
            base_dir: PathBuf::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let mut config: RunConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.probe.target = config.target;
        Ok(config)
    }

    /// Reads a TOML config; relative paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// `--output-dir` flag, then the environment variable, then the config, then `out`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        match &self.output_dir {
            Some(p) => self.resolve(p),
            None => self.resolve(Path::new("out")),
        }
    }

    /// First 16 hex digits of the SHA-256 of the config, output directory excluded.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        canonical.probe.target = canonical.target;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn stamp(&self, seed: Option<u64>) -> String {
        match seed {
            Some(s) => format!("{}/seed-{s}", self.config_hash()),
            None => self.config_hash(),
        }
    }

    /// Checks everything that can be checked without doing any work.
    /// Probe and reference-encoder parameter counts for a vocabulary of
    /// `vocab_len` tokens; fails unless the probe is strictly smaller.
    pub fn check_capacity(&self, vocab_len: usize) -> Result<(usize, usize), PipelineError> {
        let probe = self.probe_config(0).parameter_count(self.encoder.e_out);
        let model = self.encoder.parameter_count(vocab_len + 1);
        if probe >= model {
            return Err(ProbeError::CapacityViolation { probe, model }.into());
        }
        Ok((probe, model))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            ));
        }
        if !self.margin.is_finite() {
            return bad("margin must be finite".into());
        }
        if self.min_count == 0 {
            return bad("min_count must be at least 1".into());
        }
        let mut probe = self.probe.clone();
        probe.target = self.target;
        probe.validate()?;
        if self.embeddings.is_none() {
            self.encoder.validate()?;
        }
        let mut inputs: Vec<(&str, &Path)> = Vec::new();
        match &self.corpus {
            CorpusSpec::Synthetic {
                n_pairs, language, ..
            } => {
                if *n_pairs == 0 {
                    return bad("corpus.n_pairs must be positive".into());
                }
                if *language == Language::C {
                    return bad("the synthetic generator supports Java and Python".into());
                }
            }
            CorpusSpec::Files {
                samples,
                pairs,
                cfgs,
            } => {
                inputs.push(("corpus.samples", samples));
                if let Some(p) = pairs {
                    inputs.push(("corpus.pairs", p));
                } else {
                    return bad("corpus.pairs is required for validation and probing runs".into());
                }
                match cfgs {
                    Some(c) => inputs.push(("corpus.cfgs", c)),
                    None if self.strategy == TupleKind::FlowGraph => {
                        return bad("the FlowGraph strategy needs corpus.cfgs".into());
                    }
                    None => {}
                }
            }
        }
        if let Some(e) = &self.embeddings {
            inputs.push(("embeddings.trained", &e.trained));
            inputs.push(("embeddings.untrained", &e.untrained));
        }
        for (name, p) in inputs {
            if !self.resolve(p).is_file() {
                return bad(format!(
                    "{name}: {} does not exist",
                    self.resolve(p).display()
                ));
            }
        }
        Ok(())
    }

    pub fn load_corpus(&self) -> Result<Corpus, PipelineError> {
        Ok(match &self.corpus {
            CorpusSpec::Synthetic {
                seed,
                n_pairs,
                language,
            } => crate::synth::generate_synthetic_corpus(*seed, *n_pairs, *language)?,
            CorpusSpec::Files {
                samples,
                pairs,
                cfgs,
            } => crate::corpus::load_corpus(
                self.resolve(samples),
                pairs.as_ref().map(|p| self.resolve(p)).as_deref(),
                cfgs.as_ref().map(|p| self.resolve(p)).as_deref(),
            )?,
        })
    }

    fn probe_config(&self, seed: u64) -> ProbeConfig {
        ProbeConfig {
            seed,
            target: self.target,
            ..self.probe.clone()
        }
    }

    fn encoder_config(&self, seed: u64) -> EncoderConfig {
        EncoderConfig {
            seed,
            ..self.encoder.clone()
        }
    }
}

/// Accepts `found` when empty or when it names the same config hash as `expected`.
pub fn check_stamp(artifact: &str, expected: &str, found: &str) -> Result<(), PipelineError> {
    let hash = |s: &str| s.split('/').next().unwrap_or_default().to_string();
    if found.is_empty() || expected.is_empty() || hash(found) == hash(expected) {
        Ok(())
    } else {
        Err(PipelineError::StampMismatch {
            artifact: artifact.into(),
            expected: hash(expected),
            found: hash(found),
        })
    }
}

/// Parses every sample; keys are sample ids.
pub fn parse_corpus(corpus: &Corpus) -> Result<BTreeMap<String, SyntaxTree>, PipelineError> {
    corpus
        .samples()
        .iter()
        .map(|s| {
            parse_to_tree(s)
                .map(|t| (s.id.clone(), t))
                .map_err(|source| PipelineError::Syntax {
                    sample_id: s.id.clone(),
                    source,
                })
        })
        .collect()
}

/// Token vocabulary (plus flow-graph labels for the FlowGraph strategy) and label vocabulary.
pub fn build_vocabularies(
    strategy: TupleKind,
    corpus: &Corpus,
    trees: &BTreeMap<String, SyntaxTree>,
    min_count: usize,
) -> Result<(Vocabulary, Vocabulary), PipelineError> {
    let tree_tokens = trees.values().flat_map(SyntaxTree::tokens);
    let tokens = match (strategy, corpus.cfgs()) {
        (TupleKind::FlowGraph, Some(cfgs)) => Vocabulary::from_counts(
            tree_tokens.chain(cfgs.values().flat_map(|g| g.labels())),
            min_count,
        )?,
        _ => Vocabulary::from_counts(tree_tokens, min_count)?,
    };
    let labels = Vocabulary::from_counts(trees.values().flat_map(SyntaxTree::labels), min_count)?;
    Ok((tokens, labels))
}

/// DCU tuples of every sample under `strategy`, in sample id order.
pub fn build_tuples(
    strategy: TupleKind,
    corpus: &Corpus,
    trees: &BTreeMap<String, SyntaxTree>,
    vocab: &Vocabulary,
) -> Result<BTreeMap<String, DcuTuple>, PipelineError> {
    let mut out = BTreeMap::new();
    for sample in corpus.samples() {
        let id = &sample.id;
        let tree = trees
            .get(id)
            .ok_or_else(|| PipelineError::Config(format!("sample {id} was not parsed")))?;
        let wrap = |source| PipelineError::Tuple {
            sample_id: id.clone(),
            source,
        };
        let tuple = match strategy {
            TupleKind::WholeTree => tree_to_dcu(tree, vocab),
            TupleKind::StatementTrees => {
                let sts = split_statements(tree, &StatementLabels::for_language(sample.language));
                statement_trees_to_dcu(&sts, vocab).map_err(wrap)?
            }
            TupleKind::FlowGraph => {
                let graph = corpus
                    .cfg(id)
                    .ok_or_else(|| PipelineError::MissingGraph(id.clone()))?;
                flowgraph_to_dcu(graph, vocab).map_err(wrap)?
            }
        };
        out.insert(id.clone(), tuple);
    }
    Ok(out)
}

/// Tuple kind the reference encoder reads for `strategy`.
pub fn encoder_input(strategy: TupleKind) -> TupleKind {
    match strategy {
        TupleKind::FlowGraph => TupleKind::WholeTree,
        other => other,
    }
}

/// Reference encoder embeddings of `ids`, in that order.
pub fn encode_embeddings(
    params: &EncoderParams<f64>,
    tuples: &BTreeMap<String, DcuTuple>,
    ids: &[String],
    trained: bool,
    stamp: &str,
) -> Result<EmbeddingSet, PipelineError> {
    let records = ids
        .iter()
        .map(|id| {
            let t = tuples
                .get(id)
                .ok_or_else(|| EncoderError::MissingTuple(id.clone()))?;
            Ok(EmbeddingRecord {
                sample_id: id.clone(),
                layer: ENCODER_LAYER.into(),
                trained,
                vector: encode(params, t)?.into_iter().map(|v| v as f32).collect(),
            })
        })
        .collect::<Result<Vec<_>, EncoderError>>()?;
    Ok(EmbeddingSet::new(ENCODER_SOURCE, stamp, records)?)
}

/// Slot targets of every sample for `config.target`.
pub fn probe_targets(
    config: &ProbeConfig,
    tuples: &BTreeMap<String, DcuTuple>,
    trees: &BTreeMap<String, SyntaxTree>,
    labels: &Vocabulary,
) -> BTreeMap<String, EncodedTarget> {
    match config.target {
        ProbeTarget::Dcu => tuples
            .iter()
            .map(|(id, t)| (id.clone(), encode_dcu_targets(t, config)))
            .collect(),
        ProbeTarget::Cu => trees
            .iter()
            .map(|(id, tree)| {
                (
                    id.clone(),
                    encode_cu_targets(&tree_to_cu(tree), labels, config),
                )
            })
            .collect(),
    }
}

/// The records of `set` for `ids`, in that order.
pub fn subset(set: &EmbeddingSet, ids: &[String]) -> Result<EmbeddingSet, PipelineError> {
    let records = ids
        .iter()
        .map(|id| {
            set.get(id).cloned().ok_or_else(|| {
                PipelineError::Validation(ValidationError::CoverageGap {
                    set: "probe",
                    sample_id: id.clone(),
                })
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EmbeddingSet::new(set.source(), set.stamp(), records)?)
}

/// One probe trained on the `train` ids and scored on the `test` ids.
pub struct ProbeRun {
    pub params: probe::ProbeParams<f64>,
    pub report: ProbingReport,
    pub initial_loss: f64,
    pub final_loss: f64,
}

pub fn run_probe(
    set: &EmbeddingSet,
    targets: &BTreeMap<String, EncodedTarget>,
    config: &ProbeConfig,
    split: (&[String], &[String]),
    model_parameters: Option<usize>,
) -> Result<ProbeRun, PipelineError> {
    let trained = train_probe::<f64>(&subset(set, split.0)?, targets, config, model_parameters)?;
    let report = evaluate_probe(&trained.params, &subset(set, split.1)?, targets)?;
    Ok(ProbeRun {
        final_loss: trained
            .epoch_losses
            .last()
            .copied()
            .unwrap_or(trained.initial_loss),
        initial_loss: trained.initial_loss,
        params: trained.params,
        report,
    })
}

/// Everything a run wrote, plus the in-memory reports.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub config_hash: String,
    pub reports: Vec<ReportRecord>,
    pub artifacts: Vec<PathBuf>,
}

impl PipelineOutcome {
    pub fn probing(&self, seed: u64, source: EmbeddingSource) -> Option<&ProbingReport> {
        self.reports.iter().find_map(|r| match r {
            ReportRecord::Probing {
                seed: s,
                embeddings,
                report,
                ..
            } if *s == seed && *embeddings == source => Some(report),
            _ => None,
        })
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let mut w = records::create(path)?;
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

struct Embeddings {
    trained: EmbeddingSet,
    untrained: EmbeddingSet,
    model_parameters: Option<usize>,
}

/// Runs every stage and writes artifacts under `out`.
pub fn run_pipeline(config: &RunConfig, out: &Path) -> Result<PipelineOutcome, PipelineError> {
    config.validate()?;
    let hash = config.config_hash();
    let mut artifacts = Vec::new();
    let mut reports = Vec::new();

    let corpus = config.load_corpus()?;
    if config.strategy == TupleKind::FlowGraph && corpus.cfgs().is_none() {
        return Err(PipelineError::Config(
            "the FlowGraph strategy needs flow graphs".into(),
        ));
    }
    let trees = parse_corpus(&corpus)?;
    let (vocab, labels) = build_vocabularies(config.strategy, &corpus, &trees, config.min_count)?;
    let tuples = build_tuples(config.strategy, &corpus, &trees, &vocab)?;
    let encoder_tuples = if encoder_input(config.strategy) == config.strategy {
        tuples.clone()
    } else {
        build_tuples(encoder_input(config.strategy), &corpus, &trees, &vocab)?
    };
    let ids: Vec<String> = corpus.samples().iter().map(|s| s.id.clone()).collect();

    if config.embeddings.is_none() {
        config.check_capacity(vocab.len())?;
    }

    let path = out.join("vocab.jsonl");
    vocab.save(&path)?;
    artifacts.push(path);
    let path = out.join("labels.jsonl");
    labels.save(&path)?;
    artifacts.push(path);
    let path = out.join("tuples.jsonl");
    let records: Vec<TupleRecord> = ids
        .iter()
        .map(|id| TupleRecord {
            sample_id: id.clone(),
            stamp: hash.clone(),
            tuple: tuples[id].clone(),
        })
        .collect();
    let mut w = records::create(&path)?;
    write_tuples(&mut w, &records)?;
    w.flush()?;
    artifacts.push(path);
    let path = out.join("cu_tuples.jsonl");
    let records: Vec<CuRecord> = ids
        .iter()
        .map(|id| CuRecord {
            sample_id: id.clone(),
            stamp: hash.clone(),
            tuple: tree_to_cu(&trees[id]),
        })
        .collect();
    let mut w = records::create(&path)?;
    write_cu_tuples(&mut w, &records)?;
    w.flush()?;
    artifacts.push(path);

    reports.push(ReportRecord::Representation {
        stamp: hash.clone(),
        report: validate_representation(&corpus, &tuples, &config.similarity)?,
    });

    let external = match &config.embeddings {
        None => None,
        Some(e) => {
            let load = |p: &Path, trained: bool| -> Result<EmbeddingSet, PipelineError> {
                let set = embeddings::read_embeddings(config.resolve(p))?;
                check_stamp(&p.display().to_string(), &hash, set.stamp())?;
                Ok(set.select(e.layer.as_deref(), Some(trained))?)
            };
            Some(Embeddings {
                trained: load(&e.trained, true)?,
                untrained: load(&e.untrained, false)?,
                model_parameters: e.model_parameters,
            })
        }
    };

    for &seed in &config.seeds {
        let stamp = config.stamp(Some(seed));
        let dir = out.join(format!("seed-{seed}"));
        let sets = match &external {
            Some(e) => Embeddings {
                trained: e.trained.clone(),
                untrained: e.untrained.clone(),
                model_parameters: e.model_parameters,
            },
            None => {
                let enc = config.encoder_config(seed);
                let init: EncoderParams<f64> = init_encoder(&enc, &vocab);
                let trained = train_encoder(&init, &encoder_tuples, corpus.pairs(), &enc)?
                    .params
                    .rounded_to_f32();
                let untrained = init.rounded_to_f32();
                let path = dir.join("encoder.dcpm");
                write_file(&path, &refmodel::checkpoint_bytes(&trained, &stamp))?;
                artifacts.push(path);
                let sets = Embeddings {
                    trained: encode_embeddings(&trained, &encoder_tuples, &ids, true, &stamp)?,
                    untrained: encode_embeddings(&untrained, &encoder_tuples, &ids, false, &stamp)?,
                    model_parameters: Some(trained.parameter_count()),
                };
                for (name, set) in [
                    ("trained.dcpe", &sets.trained),
                    ("untrained.dcpe", &sets.untrained),
                ] {
                    let path = dir.join(name);
                    write_file(&path, &set.to_bytes())?;
                    artifacts.push(path);
                }
                sets
            }
        };
        reports.push(ReportRecord::Embeddings {
            stamp: stamp.clone(),
            seed,
            report: validate_embeddings(
                &corpus,
                &sets.trained,
                &sets.untrained,
                &config.similarity,
            )?,
        });

        let probe_config = config.probe_config(seed);
        let targets = probe_targets(&probe_config, &tuples, &trees, &labels);
        let (train_ids, test_ids) = split_samples(&ids, config.test_fraction, seed);
        let mut runs = Vec::new();
        for (source, set, name) in [
            (
                EmbeddingSource::Trained,
                &sets.trained,
                "probe-trained.dcpp",
            ),
            (
                EmbeddingSource::Untrained,
                &sets.untrained,
                "probe-untrained.dcpp",
            ),
        ] {
            let run = run_probe(
                set,
                &targets,
                &probe_config,
                (&train_ids, &test_ids),
                sets.model_parameters,
            )?;
            let path = dir.join(name);
            write_file(&path, &probe::checkpoint_bytes(&run.params, &stamp))?;
            artifacts.push(path);
            reports.push(ReportRecord::Probing {
                stamp: stamp.clone(),
                seed,
                embeddings: source,
                report: run.report.clone(),
            });
            runs.push(run);
        }
        reports.push(ReportRecord::Differential {
            stamp: stamp.clone(),
            seed,
            summary: probe_differential(&runs[0].report, &runs[1].report, config.margin)?,
        });
    }

    let path = out.join("reports.jsonl");
    report::save_reports(&path, &reports)?;
    artifacts.push(path);
    let path = out.join("report.txt");
    write_file(&path, report::render_reports(&reports).as_bytes())?;
    artifacts.push(path);
    let path = out.join("series.tsv");
    write_file(&path, report::report_series(&reports).as_bytes())?;
    artifacts.push(path);
    Ok(PipelineOutcome {
        config_hash: hash,
        reports,
        artifacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_with_defaults() {
        let config = RunConfig::from_toml(
            r#"
            target = "DCU"
            [corpus]
            source = "synthetic"
            seed = 7
            n_pairs = 10
            language = "Java"
            "#,
        )
        .unwrap();
        assert_eq!(config.seeds, vec![1, 2, 3, 4, 5]);
        assert_eq!(config.probe.target, ProbeTarget::Dcu);
        assert_eq!(config.encoder, EncoderConfig::default());
        config.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let base = "[corpus]\nsource = \"synthetic\"\nseed = 7\nn_pairs = 3\nlanguage = \"Java\"\n";
        assert!(RunConfig::from_toml(&format!("colour = 1\n{base}")).is_err());
        assert!(RunConfig::from_toml(&format!("{base}extra = 1\n")).is_err());
        assert!(RunConfig::from_toml(&format!("{base}[probe]\nhiden_units = 3\n")).is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a = RunConfig::synthetic(7, 10, Language::Java);
        let h = a.config_hash();
        assert_eq!(h.len(), 16);
        a.output_dir = Some("elsewhere".into());
        assert_eq!(a.config_hash(), h);
        a.seeds = vec![9];
        assert_ne!(a.config_hash(), h);
        assert_eq!(a.stamp(Some(9)), format!("{}/seed-9", a.config_hash()));
    }

    #[test]
    fn flowgraph_without_cfgs_fails_before_work() {
        let dir = tempfile::tempdir().unwrap();
        let samples = dir.path().join("samples.jsonl");
        let pairs = dir.path().join("pairs.jsonl");
        std::fs::write(&samples, "").unwrap();
        std::fs::write(&pairs, "").unwrap();
        let mut config = RunConfig::synthetic(7, 10, Language::Java);
        config.corpus = CorpusSpec::Files {
            samples,
            pairs: Some(pairs),
            cfgs: None,
        };
        config.strategy = TupleKind::FlowGraph;
        let out = dir.path().join("out");
        let err = run_pipeline(&config, &out).unwrap_err();
        assert_eq!(err.stage(), "config");
        assert!(!out.exists());
    }

    #[test]
    fn stamps() {
        assert!(check_stamp("x", "abc/seed-1", "").is_ok());
        assert!(check_stamp("x", "abc/seed-1", "abc/seed-2").is_ok());
        assert!(matches!(
            check_stamp("x", "abc", "def/seed-1"),
            Err(PipelineError::StampMismatch { .. })
        ));
    }

    #[test]
    fn error_kinds() {
        let e = PipelineError::from(ProbeError::CapacityViolation { probe: 2, model: 1 });
        assert_eq!(
            (e.stage(), e.kind().as_str()),
            ("probe", "CapacityViolation")
        );
        assert_eq!(PipelineError::Config("x".into()).kind(), "Config");
    }
}
