//! Similarity checks on tuples and embeddings, and the trained/untrained
//! probe contrast.
//!
//! Cosines are computed on vectors zero-padded to a common length. With
//! `centered`, each padded vector has its own mean subtracted first, which
//! turns the cosine into a Pearson correlation and makes negative means
//! possible on non-negative tuples.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClonePair, CloneType, Corpus};
use crate::embeddings::EmbeddingSet;
use crate::probe::{ProbeTarget, ProbingReport};
use crate::scalar::Scalar;
use crate::tuples::{flatten, Component, DcuTuple};

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("both vectors are zero")]
    BothZero,
    #[error("need at least one similar and one dissimilar pair, found {similar} and {dissimilar}")]
    InsufficientPairs { similar: usize, dissimilar: usize },
    #[error("no tuple for sample {0}")]
    MissingTuple(String),
    #[error("pair ({id_a}, {id_b}) has two zero {component} vectors")]
    DegeneratePair {
        id_a: String,
        id_b: String,
        component: ReportComponent,
    },
    #[error("trained embeddings have width {trained}, untrained {untrained}")]
    WidthMismatch { trained: usize, untrained: usize },
    #[error("{set} embeddings have no record for sample {sample_id}")]
    CoverageGap {
        set: &'static str,
        sample_id: String,
    },
    #[error("probe reports differ in {0}")]
    ConfigMismatch(String),
}

/// Cosine of two vectors zero-padded to the longer length.
///
/// A zero vector against a nonzero one gives 0.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Result<T, ValidationError> {
    let (mut dot, mut na, mut nb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
    }
    for &x in a {
        na += x * x;
    }
    for &y in b {
        nb += y * y;
    }
    match (na == T::zero(), nb == T::zero()) {
        (true, true) => Err(ValidationError::BothZero),
        (true, false) | (false, true) => Ok(T::zero()),
        _ => Ok((dot / (na.sqrt() * nb.sqrt())).max(-T::one()).min(T::one())),
    }
}

/// Cosine after padding both vectors and subtracting each one's mean.
pub fn centered_cosine<T: Scalar>(a: &[T], b: &[T]) -> Result<T, ValidationError> {
    let n = a.len().max(b.len());
    if n == 0 {
        return Err(ValidationError::BothZero);
    }
    let center = |v: &[T]| {
        let mean = v.iter().copied().sum::<T>() / T::from_count(n);
        let mut out: Vec<T> = v.iter().map(|&x| x - mean).collect();
        out.resize(n, -mean);
        out
    };
    cosine(&center(a), &center(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    Similar,
    Dissimilar,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Similar => "Similar",
            Criterion::Dissimilar => "Dissimilar",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReportComponent {
    D,
    C,
    U,
    Embedding,
}

impl From<Component> for ReportComponent {
    fn from(c: Component) -> Self {
        match c {
            Component::D => ReportComponent::D,
            Component::C => ReportComponent::C,
            Component::U => ReportComponent::U,
        }
    }
}

impl fmt::Display for ReportComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportComponent::D => "D",
            ReportComponent::C => "C",
            ReportComponent::U => "U",
            ReportComponent::Embedding => "Embedding",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRow {
    pub criterion: Criterion,
    pub trained: Option<bool>,
    pub component: ReportComponent,
    /// In [-1, 1].
    pub mean_cosine: f64,
    pub pair_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub centered: bool,
    pub clone_types: Vec<CloneType>,
    pub rows: Vec<SimilarityRow>,
}

impl SimilarityReport {
    pub fn row(
        &self,
        criterion: Criterion,
        trained: Option<bool>,
        component: ReportComponent,
    ) -> Option<&SimilarityRow> {
        self.rows
            .iter()
            .find(|r| r.criterion == criterion && r.trained == trained && r.component == component)
    }

    pub fn mean(
        &self,
        criterion: Criterion,
        trained: Option<bool>,
        component: ReportComponent,
    ) -> Option<f64> {
        self.row(criterion, trained, component)
            .map(|r| r.mean_cosine)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimilarityOptions {
    pub centered: bool,
    /// Clone pairs of these types count as Similar. Clone pairs without a
    /// recorded type always count.
    pub clone_types: Vec<CloneType>,
}

impl Default for SimilarityOptions {
    fn default() -> Self {
        SimilarityOptions {
            centered: false,
            clone_types: vec![CloneType::T1, CloneType::T2],
        }
    }
}

/// Similar and dissimilar pairs under `options`, in corpus order.
pub fn partition_pairs<'a>(
    corpus: &'a Corpus,
    options: &SimilarityOptions,
) -> Result<(Vec<&'a ClonePair>, Vec<&'a ClonePair>), ValidationError> {
    let similar: Vec<&ClonePair> = corpus
        .clone_pairs()
        .filter(|p| {
            p.clone_type
                .is_none_or(|t| options.clone_types.contains(&t))
        })
        .collect();
    let dissimilar: Vec<&ClonePair> = corpus.non_clone_pairs().collect();
    if similar.is_empty() || dissimilar.is_empty() {
        return Err(ValidationError::InsufficientPairs {
            similar: similar.len(),
            dissimilar: dissimilar.len(),
        });
    }
    Ok((similar, dissimilar))
}

fn mean_over<F>(
    pairs: &[&ClonePair],
    component: ReportComponent,
    mut f: F,
) -> Result<f64, ValidationError>
where
    F: FnMut(&ClonePair) -> Result<Result<f64, ValidationError>, ValidationError>,
{
    let mut sum = 0.0;
    for p in pairs {
        sum += f(p)?.map_err(|e| match e {
            ValidationError::BothZero => ValidationError::DegeneratePair {
                id_a: p.id_a.clone(),
                id_b: p.id_b.clone(),
                component,
            },
            other => other,
        })?;
    }
    Ok(sum / pairs.len() as f64)
}

fn pair_cosine(a: &[f64], b: &[f64], centered: bool) -> Result<f64, ValidationError> {
    if centered {
        centered_cosine(a, b)
    } else {
        cosine(a, b)
    }
}

/// Mean tuple cosine per component over similar and dissimilar pairs.
///
/// Rows come in the order Similar D, C, U then Dissimilar D, C, U.
pub fn validate_representation(
    corpus: &Corpus,
    tuples: &BTreeMap<String, DcuTuple>,
    options: &SimilarityOptions,
) -> Result<SimilarityReport, ValidationError> {
    let (similar, dissimilar) = partition_pairs(corpus, options)?;
    let get = |id: &str| {
        tuples
            .get(id)
            .ok_or_else(|| ValidationError::MissingTuple(id.to_string()))
    };
    let mut rows = Vec::with_capacity(6);
    for (criterion, pairs) in [
        (Criterion::Similar, &similar),
        (Criterion::Dissimilar, &dissimilar),
    ] {
        for component in [Component::D, Component::C, Component::U] {
            let mean = mean_over(pairs, component.into(), |p| {
                let a = flatten(get(&p.id_a)?, component).values;
                let b = flatten(get(&p.id_b)?, component).values;
                Ok(pair_cosine(&a, &b, options.centered))
            })?;
            rows.push(SimilarityRow {
                criterion,
                trained: None,
                component: component.into(),
                mean_cosine: mean,
                pair_count: pairs.len(),
            });
        }
    }
    Ok(SimilarityReport {
        centered: options.centered,
        clone_types: options.clone_types.clone(),
        rows,
    })
}

/// Mean embedding cosine for {Similar, Dissimilar} x {trained, untrained}.
///
/// Each set supplies the first record it holds for a sample.
pub fn validate_embeddings(
    corpus: &Corpus,
    trained: &EmbeddingSet,
    untrained: &EmbeddingSet,
    options: &SimilarityOptions,
) -> Result<SimilarityReport, ValidationError> {
    if trained.width() != untrained.width() {
        return Err(ValidationError::WidthMismatch {
            trained: trained.width(),
            untrained: untrained.width(),
        });
    }
    let (similar, dissimilar) = partition_pairs(corpus, options)?;
    for (name, set) in [("trained", trained), ("untrained", untrained)] {
        for p in similar.iter().chain(&dissimilar) {
            for id in [&p.id_a, &p.id_b] {
                if set.get(id).is_none() {
                    return Err(ValidationError::CoverageGap {
                        set: name,
                        sample_id: id.clone(),
                    });
                }
            }
        }
    }
    let mut rows = Vec::with_capacity(4);
    for (criterion, pairs) in [
        (Criterion::Similar, &similar),
        (Criterion::Dissimilar, &dissimilar),
    ] {
        for (flag, set) in [(true, trained), (false, untrained)] {
            let mean = mean_over(pairs, ReportComponent::Embedding, |p| {
                let v = |id: &str| -> Vec<f64> {
                    set.vector(id)
                        .unwrap_or_default()
                        .iter()
                        .map(|&x| f64::from(x))
                        .collect()
                };
                Ok(pair_cosine(&v(&p.id_a), &v(&p.id_b), options.centered))
            })?;
            rows.push(SimilarityRow {
                criterion,
                trained: Some(flag),
                component: ReportComponent::Embedding,
                mean_cosine: mean,
                pair_count: pairs.len(),
            });
        }
    }
    Ok(SimilarityReport {
        centered: options.centered,
        clone_types: options.clone_types.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDelta {
    pub component: Component,
    pub trained: f64,
    pub untrained: f64,
    pub delta: f64,
    pub exceeds_margin: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeDifferential {
    pub target: ProbeTarget,
    pub margin: f64,
    pub deltas: Vec<ComponentDelta>,
    /// True when the `c` accuracy gain exceeds the margin.
    pub pass: bool,
}

impl ProbeDifferential {
    pub fn delta(&self, component: Component) -> Option<f64> {
        self.deltas
            .iter()
            .find(|d| d.component == component)
            .map(|d| d.delta)
    }
}

/// Accuracy gains of a probe on trained over untrained embeddings.
pub fn probe_differential(
    trained: &ProbingReport,
    untrained: &ProbingReport,
    margin: f64,
) -> Result<ProbeDifferential, ValidationError> {
    if trained.config != untrained.config {
        return Err(ValidationError::ConfigMismatch("probe config".into()));
    }
    let deltas = trained
        .components
        .iter()
        .map(|t| {
            let u = untrained.score(t.component).ok_or_else(|| {
                ValidationError::ConfigMismatch(format!("component {}", t.component))
            })?;
            let delta = t.accuracy - u.accuracy;
            Ok(ComponentDelta {
                component: t.component,
                trained: t.accuracy,
                untrained: u.accuracy,
                delta,
                exceeds_margin: delta > margin,
            })
        })
        .collect::<Result<Vec<_>, ValidationError>>()?;
    let pass = deltas
        .iter()
        .any(|d| d.component == Component::C && d.exceeds_margin);
    Ok(ProbeDifferential {
        target: trained.config.target,
        margin,
        deltas,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CodeSample, Language};
    use crate::embeddings::EmbeddingRecord;
    use crate::probe::{ComponentScore, ProbeConfig};

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]), Ok(0.0));
        assert!((cosine(&[3.0, 4.0], &[3.0, 4.0]).unwrap() - 1.0f64).abs() < 1e-15);
        let mixed = cosine(&[1.0, 2.0, 3.0], &[1.0, 2.0]).unwrap();
        assert!((mixed - 5.0 / (14f64.sqrt() * 5f64.sqrt())).abs() < 1e-12);
        assert!((mixed - 0.5976).abs() < 1e-4);
        assert_eq!(
            cosine::<f64>(&[0.0], &[0.0, 0.0]),
            Err(ValidationError::BothZero)
        );
        assert_eq!(cosine(&[0.0], &[1.0]), Ok(0.0));
        assert!((cosine(&[1.0f32, 2.0], &[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn centering_allows_negative_similarity() {
        let c = centered_cosine(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((c + 1.0f64).abs() < 1e-12);
        assert_eq!(
            centered_cosine::<f64>(&[2.0, 2.0], &[5.0, 5.0]),
            Err(ValidationError::BothZero)
        );
    }

    fn tiny_corpus() -> Corpus {
        let samples = ["a", "b", "c"]
            .iter()
            .map(|id| CodeSample::new(*id, Language::Python, "x = 1\n"))
            .collect();
        let pairs = vec![
            ClonePair {
                id_a: "a".into(),
                id_b: "b".into(),
                is_clone: true,
                clone_type: Some(CloneType::T1),
            },
            ClonePair {
                id_a: "a".into(),
                id_b: "c".into(),
                is_clone: false,
                clone_type: None,
            },
        ];
        Corpus::new(samples, pairs, None).unwrap()
    }

    fn set(values: &[(&str, [f32; 2])], trained: bool) -> EmbeddingSet {
        let records = values
            .iter()
            .map(|(id, v)| EmbeddingRecord {
                sample_id: id.to_string(),
                layer: "l".into(),
                trained,
                vector: v.to_vec(),
            })
            .collect();
        EmbeddingSet::new("t", "", records).unwrap()
    }

    #[test]
    fn identical_embedding_sets_give_equal_rows() {
        let corpus = tiny_corpus();
        let values = [("a", [1.0, 0.0]), ("b", [1.0, 1.0]), ("c", [0.0, 1.0])];
        let report = validate_embeddings(
            &corpus,
            &set(&values, true),
            &set(&values, false),
            &SimilarityOptions::default(),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 4);
        for c in [Criterion::Similar, Criterion::Dissimilar] {
            let t = report
                .mean(c, Some(true), ReportComponent::Embedding)
                .unwrap();
            assert_eq!(
                Some(t),
                report.mean(c, Some(false), ReportComponent::Embedding)
            );
        }
        let sim = report
            .mean(Criterion::Similar, Some(true), ReportComponent::Embedding)
            .unwrap();
        assert!((sim - 0.5f64.sqrt()).abs() < 1e-7);
        let gap = validate_embeddings(
            &corpus,
            &set(&values[..2], true),
            &set(&values, false),
            &SimilarityOptions::default(),
        );
        assert_eq!(
            gap,
            Err(ValidationError::CoverageGap {
                set: "trained",
                sample_id: "c".into()
            })
        );
    }

    #[test]
    fn clone_type_filter_can_empty_the_similar_pool() {
        let corpus = tiny_corpus();
        let options = SimilarityOptions {
            clone_types: vec![CloneType::T2],
            ..SimilarityOptions::default()
        };
        assert_eq!(
            validate_representation(&corpus, &BTreeMap::new(), &options),
            Err(ValidationError::InsufficientPairs {
                similar: 0,
                dissimilar: 1
            })
        );
        assert_eq!(
            validate_representation(&corpus, &BTreeMap::new(), &SimilarityOptions::default()),
            Err(ValidationError::MissingTuple("a".into()))
        );
    }

    fn report(c: f64, u: f64) -> ProbingReport {
        let score = |component, accuracy| ComponentScore {
            component,
            accuracy,
            exact_match: 0.0,
            baseline: 0.0,
            correct: 0,
            total: 1,
        };
        ProbingReport {
            target: ProbeTarget::Cu,
            components: vec![score(Component::C, c), score(Component::U, u)],
            samples: vec![],
            truncated: 0,
            clamped: 0,
            config: ProbeConfig::default(),
        }
    }

    #[test]
    fn differential_examples() {
        let same = probe_differential(&report(0.7, 0.4), &report(0.7, 0.4), 0.0).unwrap();
        assert!(same.deltas.iter().all(|d| d.delta == 0.0));
        assert!(!same.pass);
        let diff = probe_differential(&report(0.9, 0.4), &report(0.5, 0.4), 0.1).unwrap();
        assert!((diff.delta(Component::C).unwrap() - 0.4).abs() < 1e-12);
        assert!(diff.pass);
        let mut other = report(0.5, 0.4);
        other.config.seed = 99;
        assert!(matches!(
            probe_differential(&report(0.9, 0.4), &other, 0.1),
            Err(ValidationError::ConfigMismatch(_))
        ));
    }
}
