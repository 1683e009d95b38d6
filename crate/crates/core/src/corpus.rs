//! Code samples, clone-pair annotations and pre-extracted CFGs.
//!
//! Samples file, one JSON object per line:
//! `{"id": "s1", "language": "Java", "source_text": "int f() { return 1; }"}`
//!
//! Pairs file: `{"id_a": "s1", "id_b": "s2", "is_clone": true, "clone_type": "T1"}`
//! (`clone_type` may be `null` or omitted). The CFG file format is described in
//! [`crate::syntax::flowgraph`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records;
use crate::syntax::flowgraph::{self, FlowGraph, GraphError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Language {
    C,
    Java,
    Python,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::C => "C",
            Language::Java => "Java",
            Language::Python => "Python",
        })
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c" => Ok(Language::C),
            "java" => Ok(Language::Java),
            "python" | "py" => Ok(Language::Python),
            other => Err(format!(
                "unknown language {other:?} (expected C, Java or Python)"
            )),
        }
    }
}

/// Clone taxonomy: exact copy, renamed copy, near-miss copy, semantic clone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CloneType {
    T1,
    T2,
    T3,
    T4,
}

impl FromStr for CloneType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "T1" | "1" => Ok(CloneType::T1),
            "T2" | "2" => Ok(CloneType::T2),
            "T3" | "3" => Ok(CloneType::T3),
            "T4" | "4" => Ok(CloneType::T4),
            other => Err(format!("unknown clone type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSample {
    pub id: String,
    pub language: Language,
    pub source_text: String,
}

impl CodeSample {
    pub fn new(id: impl Into<String>, language: Language, source_text: impl Into<String>) -> Self {
        CodeSample {
            id: id.into(),
            language,
            source_text: source_text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClonePair {
    pub id_a: String,
    pub id_b: String,
    pub is_clone: bool,
    #[serde(default)]
    pub clone_type: Option<CloneType>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("pair references unknown sample id {0:?}")]
    DanglingPairReference(String),
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("sample {0:?} has an empty id or empty source text")]
    EmptySample(String),
    #[error("pair ({0}, {1}) carries a clone type but is not a clone")]
    CloneTypeOnNonClone(String, String),
    #[error("CFG references unknown sample id {0:?}")]
    DanglingGraphReference(String),
    #[error("more than one CFG for sample id {0:?}")]
    DuplicateGraph(String),
    #[error("language {0} is not supported here")]
    UnsupportedLanguage(Language),
    #[error("synthetic corpus needs at least one pair")]
    NoPairs,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Validated, immutable collection of samples, pairs and optional CFGs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    samples: Vec<CodeSample>,
    index: BTreeMap<String, usize>,
    pairs: Vec<ClonePair>,
    cfgs: Option<BTreeMap<String, FlowGraph>>,
}

impl Corpus {
    pub fn new(
        samples: Vec<CodeSample>,
        pairs: Vec<ClonePair>,
        cfgs: Option<Vec<FlowGraph>>,
    ) -> Result<Self, CorpusError> {
        let mut index = BTreeMap::new();
        for (i, sample) in samples.iter().enumerate() {
            if sample.id.is_empty() || sample.source_text.trim().is_empty() {
                return Err(CorpusError::EmptySample(sample.id.clone()));
            }
            if index.insert(sample.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(sample.id.clone()));
            }
        }
        for pair in &pairs {
            for id in [&pair.id_a, &pair.id_b] {
                if !index.contains_key(id) {
                    return Err(CorpusError::DanglingPairReference(id.clone()));
                }
            }
            if !pair.is_clone && pair.clone_type.is_some() {
                return Err(CorpusError::CloneTypeOnNonClone(
                    pair.id_a.clone(),
                    pair.id_b.clone(),
                ));
            }
        }
        let cfgs = match cfgs {
            None => None,
            Some(graphs) => {
                let mut map = BTreeMap::new();
                for graph in graphs {
                    graph.validate()?;
                    if !index.contains_key(&graph.sample_id) {
                        return Err(CorpusError::DanglingGraphReference(graph.sample_id));
                    }
                    let id = graph.sample_id.clone();
                    if map.insert(id.clone(), graph).is_some() {
                        return Err(CorpusError::DuplicateGraph(id));
                    }
                }
                Some(map)
            }
        };
        Ok(Corpus {
            samples,
            index,
            pairs,
            cfgs,
        })
    }

    pub fn samples(&self) -> &[CodeSample] {
        &self.samples
    }

    pub fn pairs(&self) -> &[ClonePair] {
        &self.pairs
    }

    pub fn sample(&self, id: &str) -> Option<&CodeSample> {
        self.index.get(id).map(|&i| &self.samples[i])
    }

    pub fn cfgs(&self) -> Option<&BTreeMap<String, FlowGraph>> {
        self.cfgs.as_ref()
    }

    pub fn cfg(&self, id: &str) -> Option<&FlowGraph> {
        self.cfgs.as_ref().and_then(|m| m.get(id))
    }

    pub fn language_set(&self) -> BTreeSet<Language> {
        self.samples.iter().map(|s| s.language).collect()
    }

    pub fn clone_pairs(&self) -> impl Iterator<Item = &ClonePair> {
        self.pairs.iter().filter(|p| p.is_clone)
    }

    pub fn non_clone_pairs(&self) -> impl Iterator<Item = &ClonePair> {
        self.pairs.iter().filter(|p| !p.is_clone)
    }

    /// Writes the three files of this corpus; CFGs only when present.
    pub fn save(
        &self,
        samples_path: impl AsRef<Path>,
        pairs_path: impl AsRef<Path>,
        cfgs_path: Option<&Path>,
    ) -> Result<(), CorpusError> {
        let mut w = records::create(samples_path.as_ref())?;
        write_samples(&mut w, &self.samples)?;
        w.flush()?;
        let mut w = records::create(pairs_path.as_ref())?;
        write_pairs(&mut w, &self.pairs)?;
        w.flush()?;
        if let (Some(path), Some(cfgs)) = (cfgs_path, &self.cfgs) {
            flowgraph::save_flowgraphs(path, cfgs.values())?;
        }
        Ok(())
    }
}

pub fn read_samples(reader: impl BufRead) -> Result<Vec<CodeSample>, CorpusError> {
    read_records(reader)
}

pub fn read_pairs(reader: impl BufRead) -> Result<Vec<ClonePair>, CorpusError> {
    read_records(reader)
}

fn read_records<T: serde::de::DeserializeOwned>(
    reader: impl BufRead,
) -> Result<Vec<T>, CorpusError> {
    let mut out = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            line: line_no + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_samples(writer: &mut impl Write, samples: &[CodeSample]) -> Result<(), CorpusError> {
    for sample in samples {
        records::write_record(writer, sample)?;
    }
    Ok(())
}

pub fn write_pairs(writer: &mut impl Write, pairs: &[ClonePair]) -> Result<(), CorpusError> {
    for pair in pairs {
        records::write_record(writer, pair)?;
    }
    Ok(())
}

/// Loads and validates a corpus from its record files.
pub fn load_corpus(
    samples_path: impl AsRef<Path>,
    pairs_path: Option<&Path>,
    cfgs_path: Option<&Path>,
) -> Result<Corpus, CorpusError> {
    let samples = read_samples(records::open(samples_path.as_ref())?)?;
    let pairs = match pairs_path {
        Some(p) => read_pairs(records::open(p)?)?,
        None => Vec::new(),
    };
    let cfgs = match cfgs_path {
        Some(p) => Some(flowgraph::load_flowgraphs(p)?),
        None => None,
    };
    Corpus::new(samples, pairs, cfgs)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLES: &str = r#"{"id":"a","language":"Java","source_text":"int f() { return 1; }"}
{"id":"b","language":"Java","source_text":"int f() {\n  return 1;\n}"}
"#;

    #[test]
    fn minimal_corpus() {
        let samples = read_samples(SAMPLES.as_bytes()).unwrap();
        let pairs =
            read_pairs(r#"{"id_a":"a","id_b":"b","is_clone":true,"clone_type":"T1"}"#.as_bytes())
                .unwrap();
        let corpus = Corpus::new(samples, pairs, None).unwrap();
        assert_eq!(corpus.samples().len(), 2);
        assert_eq!(corpus.pairs().len(), 1);
        assert_eq!(corpus.pairs()[0].clone_type, Some(CloneType::T1));
        assert_eq!(corpus.sample("b").unwrap().language, Language::Java);
    }

    #[test]
    fn dangling_pair_reference() {
        let samples = read_samples(SAMPLES.as_bytes()).unwrap();
        let pairs = read_pairs(r#"{"id_a":"a","id_b":"x","is_clone":false}"#.as_bytes()).unwrap();
        match Corpus::new(samples, pairs, None) {
            Err(CorpusError::DanglingPairReference(id)) => assert_eq!(id, "x"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_and_bad_lines() {
        let dup = format!(
            "{SAMPLES}{}",
            r#"{"id":"a","language":"Python","source_text":"x = 1"}"#
        );
        let samples = read_samples(dup.as_bytes()).unwrap();
        assert!(
            matches!(Corpus::new(samples, vec![], None), Err(CorpusError::DuplicateId(id)) if id == "a")
        );
        let bad = format!("{SAMPLES}{{\"id\":\"c\"}}\n");
        assert!(matches!(
            read_samples(bad.as_bytes()),
            Err(CorpusError::MalformedRecord { line: 3, .. })
        ));
        let bad_lang = r#"{"id":"c","language":"Rust","source_text":"x"}"#;
        assert!(matches!(
            read_samples(bad_lang.as_bytes()),
            Err(CorpusError::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn clone_type_requires_clone() {
        let samples = read_samples(SAMPLES.as_bytes()).unwrap();
        let pairs = vec![ClonePair {
            id_a: "a".into(),
            id_b: "b".into(),
            is_clone: false,
            clone_type: Some(CloneType::T2),
        }];
        assert!(matches!(
            Corpus::new(samples, pairs, None),
            Err(CorpusError::CloneTypeOnNonClone(..))
        ));
    }

    #[test]
    fn graphs_must_resolve() {
        let samples = read_samples(SAMPLES.as_bytes()).unwrap();
        let g = FlowGraph::new("zz", vec![(1, "entry".into())], vec![]).unwrap();
        assert!(matches!(
            Corpus::new(samples, vec![], Some(vec![g])),
            Err(CorpusError::DanglingGraphReference(id)) if id == "zz"
        ));
    }

    #[test]
    fn language_parsing() {
        assert_eq!("java".parse::<Language>().unwrap(), Language::Java);
        assert_eq!("Python".parse::<Language>().unwrap(), Language::Python);
        assert!("cobol".parse::<Language>().is_err());
    }
}
