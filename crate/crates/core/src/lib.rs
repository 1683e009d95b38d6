//! Probing code-model embeddings for syntax.
//!
//! Programs are parsed into syntax trees, statement trees or flow graphs and
//! serialized as ⟨d, c, u⟩ tuples (positions, child structure, node tokens)
//! or the lossy ⟨c, u⟩ variant. A small probe is trained to recover those
//! tuples from frozen embeddings, and trained embeddings are contrasted with
//! those of a randomly initialized model of the same shape.
//!
//! The numeric core is generic over [`scalar::Scalar`]; the aliases below fix
//! it to `f64`.

mod binio;
pub mod corpus;
pub mod embeddings;
pub mod pipeline;
pub mod probe;
mod records;
pub mod refmodel;
pub mod report;
pub mod scalar;
pub mod syntax;
pub mod synth;
pub mod tuples;
pub mod validation;
pub mod vocab;

pub use corpus::{ClonePair, CloneType, CodeSample, Corpus, Language};
pub use embeddings::{EmbeddingRecord, EmbeddingSet};
pub use pipeline::{run_pipeline, RunConfig};
pub use probe::{ProbeConfig, ProbeTarget, ProbingReport};
pub use refmodel::EncoderConfig;
pub use scalar::Scalar;
pub use syntax::{FlowGraph, SyntaxTree};
pub use tuples::{Component, CuTuple, DcuTuple, TupleKind};
pub use validation::SimilarityReport;
pub use vocab::Vocabulary;

/// Reference encoder parameters in `f64`.
pub type Encoder = refmodel::EncoderParams<f64>;
/// Probe parameters in `f64`.
pub type Probe = probe::ProbeParams<f64>;
pub type TrainedEncoder = refmodel::TrainedEncoder<f64>;
pub type TrainedProbe = probe::TrainedProbe<f64>;
