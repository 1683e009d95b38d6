//! `syntaxprobe` command-line driver.
//!
//! Each subcommand runs one stage with file inputs and outputs. `pipeline`
//! runs them all from a TOML config. Failures print one JSON error record
//! on stderr and exit with status 1.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use syntaxprobe::corpus::{self, ClonePair, CloneType, CodeSample, Corpus, Language};
use syntaxprobe::embeddings::{self, EmbeddingSet};
use syntaxprobe::pipeline::{self, check_stamp, PipelineError, RunConfig, OUTPUT_DIR_ENV};
use syntaxprobe::probe::{self, EncodedTarget, ProbeConfig, ProbeTarget};
use syntaxprobe::refmodel::{self, EncoderConfig, EncoderParams};
use syntaxprobe::report::{self, EmbeddingSource, ReportRecord};
use syntaxprobe::syntax::SyntaxTree;
use syntaxprobe::tuples::{self, CuRecord, DcuTuple, TupleKind, TupleRecord};
use syntaxprobe::validation::{self, SimilarityOptions};
use syntaxprobe::vocab::Vocabulary;

#[derive(Parser)]
#[command(
    name = "syntaxprobe",
    version,
    about = "Probe code-model embeddings for syntax tuples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic clone corpus (samples, pairs, flow graphs).
    Generate(GenerateArgs),
    /// Parse samples into syntax trees (JSON lines).
    Parse(ParseArgs),
    /// Build the token vocabulary and, optionally, the label vocabulary.
    Vocab(VocabArgs),
    /// Serialize samples as DCU or CU tuples.
    Tuples(TuplesArgs),
    /// Train the reference encoder, or encode tuples with a checkpoint.
    Encode(EncodeArgs),
    /// Train a probe on embeddings.
    TrainProbe(TrainProbeArgs),
    /// Score a probe checkpoint on embeddings.
    Evaluate(EvaluateArgs),
    /// Mean tuple cosine over similar and dissimilar pairs.
    ValidateRepresentation(ValidateRepresentationArgs),
    /// Mean embedding cosine, trained vs untrained.
    ValidateEmbeddings(ValidateEmbeddingsArgs),
    /// Render a report file as tables and plot series.
    Report(ReportArgs),
    /// Run every stage from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Samples file (JSON lines with id, language, source_text).
    #[arg(long, conflicts_with = "source")]
    samples: Option<PathBuf>,
    /// Source files; the language follows the extension unless --language is given.
    #[arg(long, num_args = 1..)]
    source: Vec<PathBuf>,
    #[arg(long)]
    language: Option<Language>,
    /// Flow graphs file, needed by the FlowGraph strategy.
    #[arg(long)]
    cfgs: Option<PathBuf>,
}

#[derive(Args)]
struct StampArgs {
    /// Run config whose hash stamps the outputs and is checked against inputs.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Clone pairs; as many non-clone pairs are added.
    #[arg(long, default_value_t = 100)]
    n_pairs: usize,
    #[arg(long, default_value = "java")]
    language: Language,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ParseArgs {
    #[command(flatten)]
    input: SourceArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VocabArgs {
    #[command(flatten)]
    input: SourceArgs,
    #[arg(long, default_value = "WholeTree")]
    strategy: TupleKind,
    #[arg(long, default_value_t = 1)]
    min_count: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the grammar label vocabulary used by CU targets.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args)]
struct TuplesArgs {
    #[command(flatten)]
    input: SourceArgs,
    #[command(flatten)]
    stamp: StampArgs,
    #[arg(long, default_value = "WholeTree")]
    strategy: TupleKind,
    /// Write CU tuples instead of DCU tuples.
    #[arg(long)]
    cu: bool,
    /// Token vocabulary; built from the input when omitted.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    stamp: StampArgs,
    /// DCU tuples (WholeTree or StatementTrees).
    #[arg(long)]
    tuples: PathBuf,
    /// Encoder checkpoint to encode with.
    #[arg(long, conflicts_with = "train")]
    checkpoint: Option<PathBuf>,
    /// Mark the embeddings as coming from an untrained model.
    #[arg(long, requires = "checkpoint")]
    untrained: bool,
    /// Embedding file written in checkpoint mode.
    #[arg(long, requires = "checkpoint")]
    out: Option<PathBuf>,
    /// Train a fresh encoder on --pairs and write checkpoints and both embedding sets.
    #[arg(long, requires_all = ["pairs", "vocab"])]
    train: bool,
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Write the DCPE-TEXT variant instead of binary.
    #[arg(long)]
    text: bool,
}

#[derive(Args)]
struct TargetArgs {
    #[arg(long, default_value = "CU")]
    target: ProbeTarget,
    /// DCU tuples, for the DCU target.
    #[arg(long)]
    tuples: Option<PathBuf>,
    /// CU tuples, for the CU target.
    #[arg(long)]
    cu_tuples: Option<PathBuf>,
    /// Label vocabulary, for the CU target.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Layer to use when the embedding file holds several.
    #[arg(long)]
    layer: Option<String>,
    /// Seed of the train/test split.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Held-out fraction; 0 uses every sample.
    #[arg(long, default_value_t = 0.3)]
    test_fraction: f64,
}

#[derive(Args)]
struct TrainProbeArgs {
    #[command(flatten)]
    stamp: StampArgs,
    #[command(flatten)]
    targets: TargetArgs,
    #[arg(long)]
    embeddings: PathBuf,
    /// Size of the probed model, for the capacity rule.
    #[arg(long, conflicts_with = "encoder_checkpoint")]
    model_parameters: Option<usize>,
    /// Probed encoder checkpoint; its parameter count bounds the probe.
    #[arg(long)]
    encoder_checkpoint: Option<PathBuf>,
    #[arg(long)]
    hidden_units: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    stamp: StampArgs,
    #[command(flatten)]
    targets: TargetArgs,
    #[arg(long)]
    probe: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Append the report record to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimilarityArgs {
    /// Mean-center vectors before the cosine.
    #[arg(long)]
    centered: bool,
    /// Clone types counted as similar.
    #[arg(long, value_delimiter = ',', default_value = "T1,T2")]
    clone_types: Vec<CloneType>,
    /// Write the report record here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateRepresentationArgs {
    #[command(flatten)]
    input: SourceArgs,
    #[command(flatten)]
    similarity: SimilarityArgs,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, default_value = "WholeTree")]
    strategy: TupleKind,
    /// Precomputed DCU tuples; computed from the samples when omitted.
    #[arg(long)]
    tuples: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateEmbeddingsArgs {
    #[command(flatten)]
    similarity: SimilarityArgs,
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    trained: PathBuf,
    #[arg(long)]
    untrained: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    reports: PathBuf,
    /// Also write tab-separated plot series.
    #[arg(long)]
    series: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    target: Option<ProbeTarget>,
    #[arg(long)]
    strategy: Option<TupleKind>,
    #[arg(long)]
    encoder_epochs: Option<usize>,
    #[arg(long)]
    probe_epochs: Option<usize>,
}

type Result<T> = std::result::Result<T, PipelineError>;

fn config_err(message: impl Into<String>) -> PipelineError {
    PipelineError::Config(message.into())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn output_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| {
            std::env::var_os(OUTPUT_DIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_stamp(args: &StampArgs, seed: Option<u64>) -> Result<String> {
    match &args.config {
        Some(p) => Ok(RunConfig::load(p)?.stamp(seed)),
        None => Ok(String::new()),
    }
}

fn language_of(path: &Path, flag: Option<Language>) -> Result<Language> {
    if let Some(l) = flag {
        return Ok(l);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("py") => Ok(Language::Python),
        Some("java") => Ok(Language::Java),
        Some("c") | Some("h") => Ok(Language::C),
        _ => Err(config_err(format!(
            "{}: cannot infer the language, pass --language",
            path.display()
        ))),
    }
}

fn load_samples(args: &SourceArgs) -> Result<Vec<CodeSample>> {
    if let Some(p) = &args.samples {
        return Ok(corpus::read_samples(open(p)?)?);
    }
    if args.source.is_empty() {
        return Err(config_err("pass --samples or --source"));
    }
    args.source
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)
                .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", p.display())))?;
            let id = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("sample")
                .to_string();
            Ok(CodeSample::new(id, language_of(p, args.language)?, text))
        })
        .collect()
}

fn load_pairs(path: &Path) -> Result<Vec<ClonePair>> {
    Ok(corpus::read_pairs(open(path)?)?)
}

fn load_corpus(args: &SourceArgs, pairs: Option<&Path>) -> Result<Corpus> {
    let samples = load_samples(args)?;
    let pairs = match pairs {
        Some(p) => load_pairs(p)?,
        None => Vec::new(),
    };
    let cfgs = match &args.cfgs {
        Some(p) => {
            Some(syntaxprobe::syntax::load_flowgraphs(p).map_err(corpus::CorpusError::from)?)
        }
        None => None,
    };
    Ok(Corpus::new(samples, pairs, cfgs)?)
}

fn tuple_map(
    records: Vec<TupleRecord>,
    expected_stamp: &str,
    path: &Path,
) -> Result<BTreeMap<String, DcuTuple>> {
    for r in &records {
        check_stamp(&path.display().to_string(), expected_stamp, &r.stamp)?;
    }
    Ok(records
        .into_iter()
        .map(|r| (r.sample_id, r.tuple))
        .collect())
}

fn read_set(path: &Path, expected_stamp: &str, layer: Option<&str>) -> Result<EmbeddingSet> {
    let set = embeddings::read_embeddings(path)?;
    check_stamp(&path.display().to_string(), expected_stamp, set.stamp())?;
    Ok(match layer {
        Some(l) => set.select(Some(l), None)?,
        None => set,
    })
}

fn write_set(set: &EmbeddingSet, path: &Path, text: bool) -> Result<()> {
    if text {
        embeddings::write_embeddings_text(set, path)?;
    } else {
        embeddings::write_embeddings(set, path)?;
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let corpus =
        syntaxprobe::synth::generate_synthetic_corpus(args.seed, args.n_pairs, args.language)?;
    let dir = output_dir(args.output_dir.as_deref());
    let cfgs = dir.join("cfgs.jsonl");
    corpus.save(
        dir.join("samples.jsonl"),
        dir.join("pairs.jsonl"),
        Some(&cfgs),
    )?;
    println!(
        "{} samples, {} pairs -> {}",
        corpus.samples().len(),
        corpus.pairs().len(),
        dir.display()
    );
    Ok(())
}

#[derive(serde::Serialize)]
struct TreeRecord<'a> {
    sample_id: &'a str,
    tree: &'a SyntaxTree,
}

fn cmd_parse(args: ParseArgs) -> Result<()> {
    let corpus = load_corpus(&args.input, None)?;
    let trees = pipeline::parse_corpus(&corpus)?;
    let mut out = output(args.out.as_deref())?;
    for s in corpus.samples() {
        let line = serde_json::to_string(&TreeRecord {
            sample_id: &s.id,
            tree: &trees[&s.id],
        })
        .map_err(io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_vocab(args: VocabArgs) -> Result<()> {
    let corpus = load_corpus(&args.input, None)?;
    let trees = pipeline::parse_corpus(&corpus)?;
    let (vocab, labels) =
        pipeline::build_vocabularies(args.strategy, &corpus, &trees, args.min_count)?;
    vocab.save(&args.out)?;
    if let Some(p) = &args.labels_out {
        labels.save(p)?;
    }
    Ok(())
}

fn cmd_tuples(args: TuplesArgs) -> Result<()> {
    let stamp = load_stamp(&args.stamp, None)?;
    let corpus = load_corpus(&args.input, None)?;
    if args.strategy == TupleKind::FlowGraph && corpus.cfgs().is_none() {
        return Err(config_err("the FlowGraph strategy needs --cfgs"));
    }
    let trees = pipeline::parse_corpus(&corpus)?;
    let mut out = output(args.out.as_deref())?;
    if args.cu {
        let records: Vec<CuRecord> = corpus
            .samples()
            .iter()
            .map(|s| CuRecord {
                sample_id: s.id.clone(),
                stamp: stamp.clone(),
                tuple: tuples::tree_to_cu(&trees[&s.id]),
            })
            .collect();
        tuples::write_cu_tuples(&mut out, &records)?;
    } else {
        let vocab = match &args.vocab {
            Some(p) => Vocabulary::load(p)?,
            None => pipeline::build_vocabularies(args.strategy, &corpus, &trees, 1)?.0,
        };
        let map = pipeline::build_tuples(args.strategy, &corpus, &trees, &vocab)?;
        let records: Vec<TupleRecord> = corpus
            .samples()
            .iter()
            .map(|s| TupleRecord {
                sample_id: s.id.clone(),
                stamp: stamp.clone(),
                tuple: map[&s.id].clone(),
            })
            .collect();
        tuples::write_tuples(&mut out, &records)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_encode(args: EncodeArgs) -> Result<()> {
    let stamp = load_stamp(&args.stamp, Some(args.seed))?;
    let records = tuples::load_tuples(&args.tuples)?;
    let ids: Vec<String> = records.iter().map(|r| r.sample_id.clone()).collect();
    let map = tuple_map(records, &stamp, &args.tuples)?;
    if let Some(ckpt) = &args.checkpoint {
        let loaded = refmodel::load_checkpoint(ckpt)?;
        check_stamp(&ckpt.display().to_string(), &stamp, &loaded.stamp)?;
        let params: EncoderParams<f64> = loaded.params.cast();
        let set = pipeline::encode_embeddings(&params, &map, &ids, !args.untrained, &loaded.stamp)?;
        let out = args
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("embeddings.dcpe"));
        write_set(&set, &out, args.text)?;
        println!(
            "{} embeddings of width {} -> {}",
            set.len(),
            set.width(),
            out.display()
        );
        return Ok(());
    }
    if !args.train {
        return Err(config_err(
            "pass --checkpoint, or --train with --pairs and --vocab",
        ));
    }
    let vocab = Vocabulary::load(args.vocab.as_ref().expect("required by clap"))?;
    let pairs = load_pairs(args.pairs.as_ref().expect("required by clap"))?;
    let mut config = match &args.stamp.config {
        Some(p) => RunConfig::load(p)?.encoder,
        None => EncoderConfig::default(),
    };
    config.seed = args.seed;
    if let Some(e) = args.epochs {
        config.epochs = e;
    }
    config.validate()?;
    let init: EncoderParams<f64> = refmodel::init_encoder(&config, &vocab);
    let trained = refmodel::train_encoder(&init, &map, &pairs, &config)?;
    let losses = &trained.epoch_losses;
    let trained = trained.params.rounded_to_f32();
    let untrained = init.rounded_to_f32();
    let dir = output_dir(args.output_dir.as_deref());
    refmodel::save_checkpoint(dir.join("encoder.dcpm"), &trained, &stamp)?;
    refmodel::save_checkpoint(dir.join("encoder-init.dcpm"), &untrained, &stamp)?;
    let ext = if args.text { "jsonl" } else { "dcpe" };
    for (params, flag, name) in [
        (&trained, true, "trained"),
        (&untrained, false, "untrained"),
    ] {
        let set = pipeline::encode_embeddings(params, &map, &ids, flag, &stamp)?;
        write_set(&set, &dir.join(format!("{name}.{ext}")), args.text)?;
    }
    println!(
        "encoder: {} parameters, loss {:.4} -> {:.4}, outputs in {}",
        trained.parameter_count(),
        losses.first().copied().unwrap_or(f64::NAN),
        losses.last().copied().unwrap_or(f64::NAN),
        dir.display()
    );
    Ok(())
}

fn load_targets(
    args: &TargetArgs,
    config: &ProbeConfig,
    stamp: &str,
) -> Result<BTreeMap<String, EncodedTarget>> {
    match args.target {
        ProbeTarget::Dcu => {
            let path = args
                .tuples
                .as_ref()
                .ok_or_else(|| config_err("the DCU target needs --tuples"))?;
            let map = tuple_map(tuples::load_tuples(path)?, stamp, path)?;
            Ok(map
                .iter()
                .map(|(id, t)| (id.clone(), probe::encode_dcu_targets(t, config)))
                .collect())
        }
        ProbeTarget::Cu => {
            let path = args
                .cu_tuples
                .as_ref()
                .ok_or_else(|| config_err("the CU target needs --cu-tuples"))?;
            let labels = args
                .labels
                .as_ref()
                .ok_or_else(|| config_err("the CU target needs --labels"))?;
            let labels = Vocabulary::load(labels)?;
            let records = tuples::read_cu_tuples(open(path)?)?;
            records
                .into_iter()
                .map(|r| {
                    check_stamp(&path.display().to_string(), stamp, &r.stamp)?;
                    Ok((
                        r.sample_id,
                        probe::encode_cu_targets(&r.tuple, &labels, config),
                    ))
                })
                .collect()
        }
    }
}

/// Sample ids of `set` split into (train, test); everything trains and tests when `fraction` is 0.
fn split(set: &EmbeddingSet, fraction: f64, seed: u64) -> (Vec<String>, Vec<String>) {
    let mut ids: Vec<String> = Vec::new();
    for r in set.records() {
        if !ids.contains(&r.sample_id) {
            ids.push(r.sample_id.clone());
        }
    }
    if fraction <= 0.0 {
        return (ids.clone(), ids);
    }
    probe::split_samples(&ids, fraction, seed)
}

fn cmd_train_probe(args: TrainProbeArgs) -> Result<()> {
    let stamp = load_stamp(&args.stamp, Some(args.targets.seed))?;
    let mut config = match &args.stamp.config {
        Some(p) => RunConfig::load(p)?.probe,
        None => ProbeConfig::default(),
    };
    config.target = args.targets.target;
    config.seed = args.targets.seed;
    if let Some(h) = args.hidden_units {
        config.hidden_units = h;
    }
    if let Some(e) = args.epochs {
        config.epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        config.learning_rate = lr;
    }
    config.validate()?;
    let set = read_set(&args.embeddings, &stamp, args.targets.layer.as_deref())?;
    let targets = load_targets(&args.targets, &config, &stamp)?;
    let model = match (&args.encoder_checkpoint, args.model_parameters) {
        (Some(p), _) => Some(refmodel::load_checkpoint(p)?.params.parameter_count()),
        (None, n) => n,
    };
    let (train, _) = split(&set, args.targets.test_fraction, args.targets.seed);
    let trained =
        probe::train_probe::<f64>(&pipeline::subset(&set, &train)?, &targets, &config, model)?;
    probe::save_checkpoint(&args.out, &trained.params, &stamp)?;
    println!(
        "probe: {} parameters, {} training samples, loss {:.4} -> {:.4}",
        trained.params.parameter_count(),
        train.len(),
        trained.initial_loss,
        trained.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let stamp = load_stamp(&args.stamp, Some(args.targets.seed))?;
    let loaded = probe::load_checkpoint(&args.probe)?;
    check_stamp(&args.probe.display().to_string(), &stamp, &loaded.stamp)?;
    if loaded.params.config.target != args.targets.target {
        return Err(config_err(format!(
            "probe was trained for {}, --target is {}",
            loaded.params.config.target, args.targets.target
        )));
    }
    let params: probe::ProbeParams<f64> = loaded.params.cast();
    let set = read_set(&args.embeddings, &stamp, args.targets.layer.as_deref())?;
    let targets = load_targets(&args.targets, &params.config, &stamp)?;
    let (_, test) = split(&set, args.targets.test_fraction, args.targets.seed);
    let report = probe::evaluate_probe(&params, &pipeline::subset(&set, &test)?, &targets)?;
    print!("{}", report::render_probing(&report));
    if let Some(out) = &args.out {
        let source = if set.records().first().is_some_and(|r| r.trained) {
            EmbeddingSource::Trained
        } else {
            EmbeddingSource::Untrained
        };
        let record = ReportRecord::Probing {
            stamp: loaded.stamp,
            seed: params.config.seed,
            embeddings: source,
            report,
        };
        append_report(out, &record)?;
    }
    Ok(())
}

fn append_report(path: &Path, record: &ReportRecord) -> Result<()> {
    let mut existing = if path.exists() {
        report::load_reports(path)?
    } else {
        Vec::new()
    };
    existing.push(record.clone());
    report::save_reports(path, &existing)?;
    Ok(())
}

fn similarity_options(args: &SimilarityArgs) -> SimilarityOptions {
    SimilarityOptions {
        centered: args.centered,
        clone_types: args.clone_types.clone(),
    }
}

fn cmd_validate_representation(args: ValidateRepresentationArgs) -> Result<()> {
    let corpus = load_corpus(&args.input, Some(&args.pairs))?;
    let map = match &args.tuples {
        Some(p) => tuple_map(tuples::load_tuples(p)?, "", p)?,
        None => {
            if args.strategy == TupleKind::FlowGraph && corpus.cfgs().is_none() {
                return Err(config_err("the FlowGraph strategy needs --cfgs"));
            }
            let trees = pipeline::parse_corpus(&corpus)?;
            let (vocab, _) = pipeline::build_vocabularies(args.strategy, &corpus, &trees, 1)?;
            pipeline::build_tuples(args.strategy, &corpus, &trees, &vocab)?
        }
    };
    let report =
        validation::validate_representation(&corpus, &map, &similarity_options(&args.similarity))?;
    print!("{}", report::render_similarity(&report));
    if let Some(out) = &args.similarity.out {
        append_report(
            out,
            &ReportRecord::Representation {
                stamp: String::new(),
                report,
            },
        )?;
    }
    Ok(())
}

fn cmd_validate_embeddings(args: ValidateEmbeddingsArgs) -> Result<()> {
    let samples = corpus::read_samples(open(&args.samples)?)?;
    let corpus = Corpus::new(samples, load_pairs(&args.pairs)?, None)?;
    let trained = embeddings::read_embeddings(&args.trained)?;
    let untrained = embeddings::read_embeddings(&args.untrained)?;
    check_stamp(
        &args.untrained.display().to_string(),
        trained.stamp(),
        untrained.stamp(),
    )?;
    let report = validation::validate_embeddings(
        &corpus,
        &trained,
        &untrained,
        &similarity_options(&args.similarity),
    )?;
    print!("{}", report::render_similarity(&report));
    if let Some(out) = &args.similarity.out {
        let seed = trained
            .stamp()
            .rsplit("seed-")
            .next()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0);
        append_report(
            out,
            &ReportRecord::Embeddings {
                stamp: trained.stamp().to_string(),
                seed,
                report,
            },
        )?;
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let reports = report::load_reports(&args.reports)?;
    print!("{}", report::render_reports(&reports));
    if let Some(p) = &args.series {
        let mut w = create(p)?;
        w.write_all(report::report_series(&reports).as_bytes())?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_pipeline(args: PipelineArgs) -> Result<()> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(s) = args.seeds {
        config.seeds = s;
    }
    if let Some(t) = args.target {
        config.target = t;
        config.probe.target = t;
    }
    if let Some(s) = args.strategy {
        config.strategy = s;
    }
    if let Some(e) = args.encoder_epochs {
        config.encoder.epochs = e;
    }
    if let Some(e) = args.probe_epochs {
        config.probe.epochs = e;
    }
    let out = config.output_dir(args.output_dir.as_deref());
    let outcome = pipeline::run_pipeline(&config, &out)?;
    for r in &outcome.reports {
        if let ReportRecord::Differential { seed, summary, .. } = r {
            let deltas: Vec<String> = summary
                .deltas
                .iter()
                .map(|d| format!("{} {:+.4}", d.component, d.delta))
                .collect();
            println!(
                "seed {seed}: {} ({})",
                if summary.pass { "pass" } else { "no gain" },
                deltas.join(", ")
            );
        }
    }
    println!(
        "config {}: {} artifacts in {}",
        outcome.config_hash,
        outcome.artifacts.len(),
        out.display()
    );
    Ok(())
}

#[derive(serde::Serialize)]
struct ErrorRecord<'a> {
    stage: &'a str,
    kind: String,
    message: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Parse(a) => cmd_parse(a),
        Command::Vocab(a) => cmd_vocab(a),
        Command::Tuples(a) => cmd_tuples(a),
        Command::Encode(a) => cmd_encode(a),
        Command::TrainProbe(a) => cmd_train_probe(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::ValidateRepresentation(a) => cmd_validate_representation(a),
        Command::ValidateEmbeddings(a) => cmd_validate_embeddings(a),
        Command::Report(a) => cmd_report(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = ErrorRecord {
                stage: e.stage(),
                kind: e.kind(),
                message: e.to_string(),
            };
            let line = serde_json::json!({ "error": record });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
