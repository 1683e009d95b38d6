//! Single-hidden-layer probe recovering tuple components from embeddings.
//!
//! Every component becomes `max_slots` classification slots. Slot classes
//! start at 1; class 0 marks padding and never counts towards loss or
//! accuracy. Value to class offsets:
//!
//! | component                         | class        |
//! |-----------------------------------|--------------|
//! | `d` of trees and statement trees  | `d`          |
//! | `d` of flow graphs (depths from 0)| `d + 1`      |
//! | flattened `c` (contains 0)        | `c + 1`      |
//! | `u` indices                       | `u + 1`      |
//! | CU `c` flags                      | false 1, true 2 |
//!
//! Classes outside `1..classes` are clamped and counted.
//!
//! Parameter order (flat view and checkpoint): hidden weights row-major
//! `(input, hidden)`, hidden bias, then per head in component order
//! `D, C, U`: weights row-major `(hidden, slots * classes)` and bias.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binio::{self, Reader};
use crate::embeddings::EmbeddingSet;
use crate::scalar::Scalar;
use crate::tuples::{flatten_children, Component, CuTuple, DcuTuple, TupleKind};
use crate::vocab::Vocabulary;

const MAGIC: &[u8; 4] = b"DCPP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProbeTarget {
    Dcu,
    Cu,
}

impl ProbeTarget {
    pub fn components(self) -> &'static [Component] {
        match self {
            ProbeTarget::Dcu => &[Component::D, Component::C, Component::U],
            ProbeTarget::Cu => &[Component::C, Component::U],
        }
    }
}

impl fmt::Display for ProbeTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbeTarget::Dcu => "DCU",
            ProbeTarget::Cu => "CU",
        })
    }
}

impl FromStr for ProbeTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "DCU" => Ok(ProbeTarget::Dcu),
            "CU" => Ok(ProbeTarget::Cu),
            _ => Err(format!("unknown probe target {s:?} (expected DCU or CU)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("no target for sample {0}")]
    MissingTarget(String),
    #[error("probe has {probe} parameters, not fewer than the model's {model}")]
    CapacityViolation { probe: usize, model: usize },
    #[error("invalid probe config: {0}")]
    InvalidConfig(String),
    #[error("target for {sample_id} was encoded for {found}, probe expects {expected}")]
    TargetMismatch {
        sample_id: String,
        expected: ProbeTarget,
        found: ProbeTarget,
    },
    #[error("embedding width {found}, probe expects {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("no samples")]
    NoSamples,
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("not a probe checkpoint")]
    BadMagic,
    #[error("checkpoint version {found}, expected {CHECKPOINT_VERSION}")]
    VersionMismatch { found: u32 },
    #[error("corrupt checkpoint at byte {offset}")]
    CorruptCheckpoint { offset: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub hidden_units: usize,
    pub max_slots: usize,
    pub d_classes: usize,
    pub c_classes: usize,
    pub u_classes: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub target: ProbeTarget,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            hidden_units: 4,
            max_slots: 32,
            d_classes: 33,
            c_classes: 48,
            u_classes: 96,
            learning_rate: 0.002,
            momentum: 0.9,
            epochs: 100,
            batch_size: 16,
            seed: 1,
            target: ProbeTarget::Cu,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), ProbeError> {
        let bad = |m: &str| Err(ProbeError::InvalidConfig(m.to_string()));
        if self.hidden_units == 0 || self.max_slots == 0 {
            return bad("hidden_units and max_slots must be positive");
        }
        if self.target == ProbeTarget::Dcu && self.d_classes < 2 {
            return bad("d_classes must be at least 2 (padding plus one value)");
        }
        if self.c_classes < 2 || self.u_classes < 2 {
            return bad("c_classes and u_classes must be at least 2 (padding plus one value)");
        }
        if self.target == ProbeTarget::Cu && self.c_classes < 3 {
            return bad("the CU target needs c_classes >= 3");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive");
        }
        Ok(())
    }

    pub fn classes(&self, component: Component) -> usize {
        match component {
            Component::D => self.d_classes,
            Component::C => self.c_classes,
            Component::U => self.u_classes,
        }
    }

    /// Parameter count of a probe over `input_width`-wide embeddings.
    pub fn parameter_count(&self, input_width: usize) -> usize {
        let h = self.hidden_units;
        let heads: usize = self
            .target
            .components()
            .iter()
            .map(|&c| (h + 1) * self.max_slots * self.classes(c))
            .sum();
        input_width * h + h + heads
    }
}

/// Slot classes for every probed component of one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedTarget {
    pub target: ProbeTarget,
    /// One `(component, slots)` entry per probed component, in component order.
    pub heads: Vec<(Component, Vec<u32>)>,
    /// Values dropped because a component was longer than `max_slots`.
    pub truncated: usize,
    /// Values clamped into the class range.
    pub clamped: usize,
}

impl EncodedTarget {
    pub fn slots(&self, component: Component) -> Option<&[u32]> {
        self.heads
            .iter()
            .find(|(c, _)| *c == component)
            .map(|(_, s)| s.as_slice())
    }
}

fn slot_encode(
    values: impl ExactSizeIterator<Item = i64>,
    classes: usize,
    slots: usize,
) -> (Vec<u32>, usize, usize) {
    let truncated = values.len().saturating_sub(slots);
    let mut clamped = 0;
    let mut out: Vec<u32> = values
        .take(slots)
        .map(|v| {
            let c = v.clamp(1, classes as i64 - 1);
            if c != v {
                clamped += 1;
            }
            c as u32
        })
        .collect();
    out.resize(slots, 0);
    (out, truncated, clamped)
}

fn assemble(
    target: ProbeTarget,
    parts: Vec<(Component, (Vec<u32>, usize, usize))>,
) -> EncodedTarget {
    let truncated = parts.iter().map(|(_, p)| p.1).sum();
    let clamped = parts.iter().map(|(_, p)| p.2).sum();
    EncodedTarget {
        target,
        heads: parts.into_iter().map(|(c, p)| (c, p.0)).collect(),
        truncated,
        clamped,
    }
}

/// Slot targets of a DCU tuple.
pub fn encode_dcu_targets(t: &DcuTuple, config: &ProbeConfig) -> EncodedTarget {
    let l = config.max_slots;
    let d_offset = if t.kind == TupleKind::FlowGraph { 1 } else { 0 };
    let c = flatten_children(&t.c);
    assemble(
        ProbeTarget::Dcu,
        vec![
            (
                Component::D,
                slot_encode(
                    t.d.iter().map(|&v| v as i64 + d_offset),
                    config.d_classes,
                    l,
                ),
            ),
            (
                Component::C,
                slot_encode(c.iter().map(|&v| v as i64 + 1), config.c_classes, l),
            ),
            (
                Component::U,
                slot_encode(t.u.iter().map(|&v| v as i64 + 1), config.u_classes, l),
            ),
        ],
    )
}

/// Slot targets of a CU tuple; labels are indexed through `labels`.
pub fn encode_cu_targets(t: &CuTuple, labels: &Vocabulary, config: &ProbeConfig) -> EncodedTarget {
    let l = config.max_slots;
    assemble(
        ProbeTarget::Cu,
        vec![
            (
                Component::C,
                slot_encode(
                    t.c.iter().map(|&b| if b { 2 } else { 1 }),
                    config.c_classes,
                    l,
                ),
            ),
            (
                Component::U,
                slot_encode(
                    t.u.iter().map(|s| labels.lookup(s) as i64 + 1),
                    config.u_classes,
                    l,
                ),
            ),
        ],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeParams<T> {
    pub config: ProbeConfig,
    pub input_width: usize,
    pub hidden_weights: Vec<T>,
    pub hidden_bias: Vec<T>,
    /// Per head, in component order: (component, weights, bias).
    pub heads: Vec<(Component, Vec<T>, Vec<T>)>,
}

impl<T: Scalar> ProbeParams<T> {
    /// Xavier-uniform weights, zero biases.
    pub fn init(config: &ProbeConfig, input_width: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let h = config.hidden_units;
        let mut xavier = |fan_in: usize, fan_out: usize, n: usize| -> Vec<T> {
            let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..n).map(|_| T::cast(rng.gen_range(-r..=r))).collect()
        };
        let hidden_weights = xavier(input_width, h, input_width * h);
        let heads = config
            .target
            .components()
            .iter()
            .map(|&c| {
                let width = config.max_slots * config.classes(c);
                (
                    c,
                    xavier(h, config.classes(c), h * width),
                    vec![T::zero(); width],
                )
            })
            .collect();
        ProbeParams {
            config: config.clone(),
            input_width,
            hidden_weights,
            hidden_bias: vec![T::zero(); h],
            heads,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.hidden_weights.len()
            + self.hidden_bias.len()
            + self
                .heads
                .iter()
                .map(|(_, w, b)| w.len() + b.len())
                .sum::<usize>()
    }

    pub fn flat(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.parameter_count());
        v.extend_from_slice(&self.hidden_weights);
        v.extend_from_slice(&self.hidden_bias);
        for (_, w, b) in &self.heads {
            v.extend_from_slice(w);
            v.extend_from_slice(b);
        }
        v
    }

    pub fn set_flat(&mut self, values: &[T]) {
        assert_eq!(
            values.len(),
            self.parameter_count(),
            "parameter vector length"
        );
        let mut rest = values;
        let mut take = |dst: &mut [T]| {
            let (a, b) = rest.split_at(dst.len());
            dst.copy_from_slice(a);
            rest = b;
        };
        take(&mut self.hidden_weights);
        take(&mut self.hidden_bias);
        for (_, w, b) in &mut self.heads {
            take(w);
            take(b);
        }
    }

    pub fn cast<U: Scalar>(&self) -> ProbeParams<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::cast(x.as_f64())).collect();
        ProbeParams {
            config: self.config.clone(),
            input_width: self.input_width,
            hidden_weights: conv(&self.hidden_weights),
            hidden_bias: conv(&self.hidden_bias),
            heads: self
                .heads
                .iter()
                .map(|(c, w, b)| (*c, conv(w), conv(b)))
                .collect(),
        }
    }
}

struct Activations<T> {
    pre: Vec<T>,
    hidden: Vec<T>,
    /// Per head, slot-major logits.
    logits: Vec<Vec<T>>,
}

fn forward<T: Scalar>(p: &ProbeParams<T>, x: &[T]) -> Activations<T> {
    let h = p.config.hidden_units;
    let mut pre = p.hidden_bias.clone();
    for (i, &xi) in x.iter().enumerate() {
        for (z, &w) in pre.iter_mut().zip(&p.hidden_weights[i * h..(i + 1) * h]) {
            *z += xi * w;
        }
    }
    let hidden: Vec<T> = pre.iter().map(|&z| z.max(T::zero())).collect();
    let logits = p
        .heads
        .iter()
        .map(|(_, w, b)| {
            let width = b.len();
            let mut z = b.clone();
            for (j, &hj) in hidden.iter().enumerate() {
                if hj == T::zero() {
                    continue;
                }
                for (zk, &wk) in z.iter_mut().zip(&w[j * width..(j + 1) * width]) {
                    *zk += hj * wk;
                }
            }
            z
        })
        .collect();
    Activations {
        pre,
        hidden,
        logits,
    }
}

fn slot_softmax<T: Scalar>(z: &[T]) -> (Vec<T>, T) {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    (e.into_iter().map(|v| v / s).collect(), m + s.ln())
}

/// Cross-entropy over non-pad slots of one sample; adds the gradient into `grad`.
fn sample_step<T: Scalar>(
    p: &ProbeParams<T>,
    x: &[T],
    target: &EncodedTarget,
    grad: Option<&mut [T]>,
) -> T {
    let a = forward(p, x);
    let h = p.config.hidden_units;
    let mut loss = T::zero();
    let mut dz_heads: Vec<Vec<T>> = Vec::with_capacity(p.heads.len());
    for ((_, _, b), (logits, (_, slots))) in p.heads.iter().zip(a.logits.iter().zip(&target.heads))
    {
        let k = b.len() / p.config.max_slots;
        let mut dz = vec![T::zero(); b.len()];
        for (l, &y) in slots.iter().enumerate() {
            if y == 0 {
                continue;
            }
            let z = &logits[l * k..(l + 1) * k];
            let (probs, lse) = slot_softmax(z);
            loss += lse - z[y as usize];
            for (d, &pk) in dz[l * k..(l + 1) * k].iter_mut().zip(&probs) {
                *d = pk;
            }
            dz[l * k + y as usize] -= T::one();
        }
        dz_heads.push(dz);
    }
    let Some(grad) = grad else { return loss };
    let (g_hw, rest) = grad.split_at_mut(p.hidden_weights.len());
    let (g_hb, mut rest) = rest.split_at_mut(h);
    let mut dh = vec![T::zero(); h];
    for ((_, w, b), dz) in p.heads.iter().zip(&dz_heads) {
        let width = b.len();
        let (g_w, r) = rest.split_at_mut(w.len());
        let (g_b, r) = r.split_at_mut(width);
        rest = r;
        for (gb, &d) in g_b.iter_mut().zip(dz) {
            *gb += d;
        }
        for j in 0..h {
            let row = &w[j * width..(j + 1) * width];
            dh[j] += dot(row, dz);
            let hj = a.hidden[j];
            if hj != T::zero() {
                for (gw, &d) in g_w[j * width..(j + 1) * width].iter_mut().zip(dz) {
                    *gw += hj * d;
                }
            }
        }
    }
    let dpre: Vec<T> = dh
        .iter()
        .zip(&a.pre)
        .map(|(&g, &z)| if z > T::zero() { g } else { T::zero() })
        .collect();
    for (gb, &d) in g_hb.iter_mut().zip(&dpre) {
        *gb += d;
    }
    for (i, &xi) in x.iter().enumerate() {
        for (gw, &d) in g_hw[i * h..(i + 1) * h].iter_mut().zip(&dpre) {
            *gw += xi * d;
        }
    }
    loss
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Summed slot cross-entropy of one sample.
pub fn sample_loss<T: Scalar>(params: &ProbeParams<T>, x: &[T], target: &EncodedTarget) -> T {
    sample_step(params, x, target, None)
}

/// Loss of one sample and its analytic gradient in [`ProbeParams::flat`] order.
pub fn sample_loss_gradient<T: Scalar>(
    params: &ProbeParams<T>,
    x: &[T],
    target: &EncodedTarget,
) -> (T, Vec<T>) {
    let mut grad = vec![T::zero(); params.parameter_count()];
    let loss = sample_step(params, x, target, Some(&mut grad));
    (loss, grad)
}

/// Predicted class per slot, per head.
pub fn predict<T: Scalar>(params: &ProbeParams<T>, x: &[T]) -> Vec<(Component, Vec<u32>)> {
    let a = forward(params, x);
    params
        .heads
        .iter()
        .zip(&a.logits)
        .map(|((c, _, b), z)| {
            let k = b.len() / params.config.max_slots;
            let slots = z
                .chunks(k)
                .map(|s| {
                    let mut best = 0;
                    for (i, &v) in s.iter().enumerate() {
                        if v > s[best] {
                            best = i;
                        }
                    }
                    best as u32
                })
                .collect();
            (*c, slots)
        })
        .collect()
}

fn gather<'a, T: Scalar>(
    embeddings: &EmbeddingSet,
    targets: &'a BTreeMap<String, EncodedTarget>,
    target: ProbeTarget,
    input_width: usize,
) -> Result<Vec<(String, Vec<T>, &'a EncodedTarget)>, ProbeError> {
    if embeddings.width() != input_width {
        return Err(ProbeError::WidthMismatch {
            expected: input_width,
            found: embeddings.width(),
        });
    }
    embeddings
        .records()
        .iter()
        .map(|r| {
            let t = targets
                .get(&r.sample_id)
                .ok_or_else(|| ProbeError::MissingTarget(r.sample_id.clone()))?;
            if t.target != target {
                return Err(ProbeError::TargetMismatch {
                    sample_id: r.sample_id.clone(),
                    expected: target,
                    found: t.target,
                });
            }
            Ok((
                r.sample_id.clone(),
                r.vector.iter().map(|&v| T::cast(v as f64)).collect(),
                t,
            ))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainedProbe<T> {
    pub params: ProbeParams<T>,
    /// Mean per-sample loss of each epoch, accumulated during the pass.
    pub epoch_losses: Vec<f64>,
    /// Initial loss over all training samples before any update.
    pub initial_loss: f64,
}

/// Trains a probe on every record of `embeddings`.
///
/// When `model_parameters` is given, the probe must be strictly smaller.
pub fn train_probe<T: Scalar>(
    embeddings: &EmbeddingSet,
    targets: &BTreeMap<String, EncodedTarget>,
    config: &ProbeConfig,
    model_parameters: Option<usize>,
) -> Result<TrainedProbe<T>, ProbeError> {
    config.validate()?;
    let probe = config.parameter_count(embeddings.width());
    if let Some(model) = model_parameters {
        if probe >= model {
            return Err(ProbeError::CapacityViolation { probe, model });
        }
    }
    let data = gather::<T>(embeddings, targets, config.target, embeddings.width())?;
    let mut p = ProbeParams::<T>::init(config, embeddings.width());
    let initial_loss = data
        .iter()
        .map(|(_, x, t)| sample_loss(&p, x, t).as_f64())
        .sum::<f64>()
        / data.len() as f64;
    let mut theta = p.flat();
    let mut velocity = vec![T::zero(); theta.len()];
    let mut grad = vec![T::zero(); theta.len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7072_6f62);
    let (lr, mu) = (T::cast(config.learning_rate), T::cast(config.momentum));
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = T::zero());
            for &i in batch {
                let (_, x, t) = &data[i];
                total += sample_step(&p, x, t, Some(&mut grad)).as_f64();
            }
            let inv = T::one() / T::from_count(batch.len());
            for ((t, v), &g) in theta.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = mu * *v - lr * g * inv;
                *t += *v;
            }
            p.set_flat(&theta);
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() || theta.iter().any(|t| !t.is_finite()) {
            return Err(ProbeError::NonFiniteLoss { epoch });
        }
        epoch_losses.push(mean);
    }
    Ok(TrainedProbe {
        params: p,
        epoch_losses,
        initial_loss,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentScore {
    pub component: Component,
    /// Correct non-pad slots over all non-pad slots.
    pub accuracy: f64,
    /// Fraction of samples with every non-pad slot of this component correct.
    pub exact_match: f64,
    /// Accuracy of the best input-independent predictor (most frequent class per slot).
    pub baseline: f64,
    pub correct: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub sample_id: String,
    /// `(component, correct, total)` per head.
    pub slots: Vec<(Component, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbingReport {
    pub target: ProbeTarget,
    pub components: Vec<ComponentScore>,
    pub samples: Vec<SampleScore>,
    pub truncated: usize,
    pub clamped: usize,
    pub config: ProbeConfig,
}

impl ProbingReport {
    pub fn score(&self, component: Component) -> Option<&ComponentScore> {
        self.components.iter().find(|s| s.component == component)
    }

    pub fn accuracy(&self, component: Component) -> Option<f64> {
        self.score(component).map(|s| s.accuracy)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Scores the probe on every record of `embeddings`.
pub fn evaluate_probe<T: Scalar>(
    params: &ProbeParams<T>,
    embeddings: &EmbeddingSet,
    targets: &BTreeMap<String, EncodedTarget>,
) -> Result<ProbingReport, ProbeError> {
    let data = gather::<T>(
        embeddings,
        targets,
        params.config.target,
        params.input_width,
    )?;
    let components = params.config.target.components();
    let mut correct = vec![0usize; components.len()];
    let mut total = vec![0usize; components.len()];
    let mut exact = vec![0usize; components.len()];
    let mut samples = Vec::with_capacity(data.len());
    let (mut truncated, mut clamped) = (0, 0);
    for (id, x, t) in &data {
        truncated += t.truncated;
        clamped += t.clamped;
        let predicted = predict(params, x);
        let mut slots = Vec::with_capacity(components.len());
        for (h, ((c, pred), (_, gold))) in predicted.iter().zip(&t.heads).enumerate() {
            let mut ok = 0;
            let mut n = 0;
            for (&p, &g) in pred.iter().zip(gold) {
                if g != 0 {
                    n += 1;
                    ok += (p == g) as usize;
                }
            }
            correct[h] += ok;
            total[h] += n;
            exact[h] += (ok == n) as usize;
            slots.push((*c, ok, n));
        }
        samples.push(SampleScore {
            sample_id: id.clone(),
            slots,
        });
    }
    let golds: Vec<&EncodedTarget> = data.iter().map(|(_, _, t)| *t).collect();
    let components = components
        .iter()
        .enumerate()
        .map(|(h, &c)| ComponentScore {
            component: c,
            accuracy: ratio(correct[h], total[h]),
            exact_match: ratio(exact[h], data.len()),
            baseline: majority_rate(&golds, c),
            correct: correct[h],
            total: total[h],
        })
        .collect();
    Ok(ProbingReport {
        target: params.config.target,
        components,
        samples,
        truncated,
        clamped,
        config: params.config.clone(),
    })
}

/// Accuracy of predicting, at every slot, the most frequent non-pad class of that slot.
pub fn majority_rate(targets: &[&EncodedTarget], component: Component) -> f64 {
    let mut per_slot: Vec<BTreeMap<u32, usize>> = Vec::new();
    let mut total = 0;
    for t in targets {
        let Some(slots) = t.slots(component) else {
            continue;
        };
        if per_slot.len() < slots.len() {
            per_slot.resize(slots.len(), BTreeMap::new());
        }
        for (l, &g) in slots.iter().enumerate() {
            if g != 0 {
                *per_slot[l].entry(g).or_default() += 1;
                total += 1;
            }
        }
    }
    let best: usize = per_slot
        .iter()
        .map(|m| m.values().copied().max().unwrap_or(0))
        .sum();
    ratio(best, total)
}

/// Deterministic split of sample ids into (train, test).
pub fn split_samples(ids: &[String], test_fraction: f64, seed: u64) -> (Vec<String>, Vec<String>) {
    let mut shuffled: Vec<String> = ids.to_vec();
    shuffled.sort();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x7370_6c74));
    let n_test = ((ids.len() as f64) * test_fraction.clamp(0.0, 1.0)).round() as usize;
    let test: HashSet<&String> = shuffled[..n_test].iter().collect();
    let keep = |want_test: bool| {
        ids.iter()
            .filter(|id| test.contains(id) == want_test)
            .cloned()
            .collect()
    };
    (keep(false), keep(true))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeCheckpoint {
    pub params: ProbeParams<f32>,
    pub stamp: String,
}

/// Checkpoint bytes: `DCPP`, version, input width (u32), config as JSON
/// (u32 length + bytes), stamp (u32 length + bytes), then every parameter as
/// f32 in flat order.
pub fn checkpoint_bytes<T: Scalar>(params: &ProbeParams<T>, stamp: &str) -> Vec<u8> {
    let config = serde_json::to_string(&params.config).expect("config serializes");
    let mut out =
        Vec::with_capacity(20 + config.len() + stamp.len() + 4 * params.parameter_count());
    out.extend_from_slice(MAGIC);
    binio::put_u32(&mut out, CHECKPOINT_VERSION);
    binio::put_u32(&mut out, params.input_width as u32);
    binio::put_str(&mut out, &config);
    binio::put_str(&mut out, stamp);
    for v in params.flat() {
        binio::put_f32(&mut out, v.as_f64() as f32);
    }
    out
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<ProbeCheckpoint, ProbeError> {
    let mut r = Reader::new(bytes);
    let corrupt = |t: binio::Truncated| ProbeError::CorruptCheckpoint { offset: t.offset };
    if r.take(4).map_err(|_| ProbeError::BadMagic)? != MAGIC {
        return Err(ProbeError::BadMagic);
    }
    let version = r.u32().map_err(corrupt)?;
    if version != CHECKPOINT_VERSION {
        return Err(ProbeError::VersionMismatch { found: version });
    }
    let input_width = r.u32().map_err(corrupt)? as usize;
    let at = r.pos();
    let config: ProbeConfig = r
        .string()
        .map_err(corrupt)?
        .and_then(|s| serde_json::from_str(&s).ok())
        .ok_or(ProbeError::CorruptCheckpoint { offset: at })?;
    config
        .validate()
        .map_err(|_| ProbeError::CorruptCheckpoint { offset: at })?;
    let at = r.pos();
    let stamp = r
        .string()
        .map_err(corrupt)?
        .ok_or(ProbeError::CorruptCheckpoint { offset: at })?;
    let mut params = ProbeParams::<f32>::init(&config, input_width);
    let n = params.parameter_count();
    if r.remaining() != 4 * n {
        return Err(ProbeError::CorruptCheckpoint {
            offset: r.pos() + r.remaining().min(4 * n),
        });
    }
    let start = r.pos();
    let values = r.f32s(n).map_err(corrupt)?;
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(ProbeError::CorruptCheckpoint {
            offset: start + 4 * i,
        });
    }
    params.set_flat(&values);
    Ok(ProbeCheckpoint { params, stamp })
}

pub fn save_checkpoint<T: Scalar>(
    path: impl AsRef<Path>,
    params: &ProbeParams<T>,
    stamp: &str,
) -> Result<(), ProbeError> {
    let mut w = crate::records::create(path.as_ref())?;
    w.write_all(&checkpoint_bytes(params, stamp))?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ProbeCheckpoint, ProbeError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_checkpoint(&bytes)
}
