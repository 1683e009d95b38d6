//! Built-in reference encoder.
//!
//! Each node contributes `[label_table[u], d / n, child_count]`; node vectors
//! are mean-pooled, mapped through one affine layer and squashed with tanh.
//! Training fits `sigmoid(scale * cos(e_a, e_b) + offset)` to the clone label
//! of each pair with binary cross-entropy and momentum gradient descent.
//!
//! Parameter order (used by [`EncoderParams::flat`] and the checkpoint):
//! `label_table` row-major `(rows, e_label)`, `proj_weights` row-major
//! `(e_label + 2, e_out)`, `proj_bias`, `scale`, `offset`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binio::{self, Reader};
use crate::corpus::ClonePair;
use crate::scalar::Scalar;
use crate::tuples::{DcuTuple, TupleKind};
use crate::vocab::Vocabulary;

const MAGIC: &[u8; 4] = b"DCPM";
pub const CHECKPOINT_VERSION: u32 = 1;
const INIT_RANGE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("tuple has no nodes")]
    EmptyTuple,
    #[error("the encoder does not consume {0} tuples")]
    UnsupportedKind(TupleKind),
    #[error("label index {index} outside the {rows}-row label table")]
    IndexOutOfRange { index: u32, rows: usize },
    #[error("no training pairs")]
    NoPairs,
    #[error("no tuple for sample {0}")]
    MissingTuple(String),
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid encoder config: {0}")]
    InvalidConfig(String),
    #[error("not an encoder checkpoint")]
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
pub struct EncoderConfig {
    pub e_label: usize,
    pub e_out: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            e_label: 64,
            e_out: 512,
            learning_rate: 0.5,
            momentum: 0.9,
            epochs: 50,
            batch_size: 16,
            seed: 1,
        }
    }
}

impl EncoderConfig {
    /// Parameter count of an encoder with `rows` label-table rows.
    pub fn parameter_count(&self, rows: usize) -> usize {
        rows * self.e_label + (self.e_label + 2) * self.e_out + self.e_out + 2
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        let bad = |m: &str| Err(EncoderError::InvalidConfig(m.to_string()));
        if self.e_label == 0 || self.e_out == 0 {
            return bad("e_label and e_out must be positive");
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
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams<T> {
    /// Label table rows: vocabulary size plus the OOV row.
    pub rows: usize,
    pub e_label: usize,
    pub e_out: usize,
    pub label_table: Vec<T>,
    pub proj_weights: Vec<T>,
    pub proj_bias: Vec<T>,
    pub scale: T,
    pub offset: T,
    pub seed: u64,
}

/// Seeded uniform initialization on `[-0.05, 0.05]` with `scale = 1`, `offset = 0`.
pub fn init_encoder<T: Scalar>(config: &EncoderConfig, vocab: &Vocabulary) -> EncoderParams<T> {
    init_with_rows(config, vocab.len() + 1)
}

pub fn init_with_rows<T: Scalar>(config: &EncoderConfig, rows: usize) -> EncoderParams<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draw = |n: usize| -> Vec<T> {
        (0..n)
            .map(|_| T::cast(rng.gen_range(-INIT_RANGE..=INIT_RANGE)))
            .collect()
    };
    let label_table = draw(rows * config.e_label);
    let proj_weights = draw((config.e_label + 2) * config.e_out);
    let proj_bias = draw(config.e_out);
    EncoderParams {
        rows,
        e_label: config.e_label,
        e_out: config.e_out,
        label_table,
        proj_weights,
        proj_bias,
        scale: T::one(),
        offset: T::zero(),
        seed: config.seed,
    }
}

impl<T: Scalar> EncoderParams<T> {
    pub fn zeros(rows: usize, e_label: usize, e_out: usize) -> Self {
        EncoderParams {
            rows,
            e_label,
            e_out,
            label_table: vec![T::zero(); rows * e_label],
            proj_weights: vec![T::zero(); (e_label + 2) * e_out],
            proj_bias: vec![T::zero(); e_out],
            scale: T::zero(),
            offset: T::zero(),
            seed: 0,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.rows * self.e_label + (self.e_label + 2) * self.e_out + self.e_out + 2
    }

    pub fn flat(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.parameter_count());
        v.extend_from_slice(&self.label_table);
        v.extend_from_slice(&self.proj_weights);
        v.extend_from_slice(&self.proj_bias);
        v.push(self.scale);
        v.push(self.offset);
        v
    }

    /// Overwrites all parameters from a slice in [`flat`](Self::flat) order.
    pub fn set_flat(&mut self, values: &[T]) {
        assert_eq!(
            values.len(),
            self.parameter_count(),
            "parameter vector length"
        );
        let (a, rest) = values.split_at(self.label_table.len());
        let (b, rest) = rest.split_at(self.proj_weights.len());
        let (c, rest) = rest.split_at(self.proj_bias.len());
        self.label_table.copy_from_slice(a);
        self.proj_weights.copy_from_slice(b);
        self.proj_bias.copy_from_slice(c);
        self.scale = rest[0];
        self.offset = rest[1];
    }

    pub fn cast<U: Scalar>(&self) -> EncoderParams<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::cast(x.as_f64())).collect();
        EncoderParams {
            rows: self.rows,
            e_label: self.e_label,
            e_out: self.e_out,
            label_table: conv(&self.label_table),
            proj_weights: conv(&self.proj_weights),
            proj_bias: conv(&self.proj_bias),
            scale: U::cast(self.scale.as_f64()),
            offset: U::cast(self.offset.as_f64()),
            seed: self.seed,
        }
    }

    /// The parameters as stored in a checkpoint.
    pub fn rounded_to_f32(&self) -> Self {
        self.cast::<f32>().cast()
    }
}

/// Sufficient statistics of one tuple for the mean-pooled forward pass.
#[derive(Debug, Clone)]
struct Pooled<T> {
    labels: Vec<(usize, T)>,
    position: T,
    children: T,
}

fn pool<T: Scalar>(t: &DcuTuple, rows: usize) -> Result<Pooled<T>, EncoderError> {
    if t.kind == TupleKind::FlowGraph {
        return Err(EncoderError::UnsupportedKind(t.kind));
    }
    let n = t.node_count();
    if n == 0 {
        return Err(EncoderError::EmptyTuple);
    }
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &u in &t.u {
        if u as usize >= rows {
            return Err(EncoderError::IndexOutOfRange { index: u, rows });
        }
        *counts.entry(u).or_default() += 1;
    }
    let nf = T::from_count(n);
    let labels = counts
        .into_iter()
        .map(|(u, k)| (u as usize, T::from_count(k) / nf))
        .collect();
    let position = t.d.iter().map(|&d| T::from_count(d as usize)).sum::<T>() / (nf * nf);
    let children = t
        .child_counts()
        .iter()
        .map(|&k| T::from_count(k as usize))
        .sum::<T>()
        / nf;
    Ok(Pooled {
        labels,
        position,
        children,
    })
}

struct Forward<T> {
    x: Vec<T>,
    e: Vec<T>,
}

fn forward<T: Scalar>(p: &EncoderParams<T>, s: &Pooled<T>) -> Forward<T> {
    let (el, eo) = (p.e_label, p.e_out);
    let mut x = vec![T::zero(); el + 2];
    for &(u, w) in &s.labels {
        for (xj, &t) in x.iter_mut().zip(&p.label_table[u * el..(u + 1) * el]) {
            *xj += w * t;
        }
    }
    x[el] = s.position;
    x[el + 1] = s.children;
    let mut z = p.proj_bias.clone();
    for (j, &xj) in x.iter().enumerate() {
        if xj == T::zero() {
            continue;
        }
        for (zo, &w) in z.iter_mut().zip(&p.proj_weights[j * eo..(j + 1) * eo]) {
            *zo += xj * w;
        }
    }
    let e = z.into_iter().map(T::tanh).collect();
    Forward { x, e }
}

/// Embedding of one WholeTree or StatementTrees tuple.
pub fn encode<T: Scalar>(params: &EncoderParams<T>, t: &DcuTuple) -> Result<Vec<T>, EncoderError> {
    Ok(forward(params, &pool(t, params.rows)?).e)
}

fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `ln(1 + e^s)` without overflow.
fn softplus<T: Scalar>(s: T) -> T {
    s.max(T::zero()) + (-s.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(s: T) -> T {
    T::one() / (T::one() + (-s).exp())
}

/// Cosine of two embeddings, 0 when either is the zero vector.
fn pair_cos<T: Scalar>(a: &[T], b: &[T]) -> (T, T, T) {
    let (na, nb) = (norm(a), norm(b));
    if na == T::zero() || nb == T::zero() {
        return (T::zero(), na, nb);
    }
    (dot(a, b) / (na * nb), na, nb)
}

fn backward_side<T: Scalar>(
    p: &EncoderParams<T>,
    s: &Pooled<T>,
    f: &Forward<T>,
    de: &[T],
    grad: &mut [T],
) {
    let (el, eo) = (p.e_label, p.e_out);
    let table_len = p.label_table.len();
    let w_len = p.proj_weights.len();
    let dz: Vec<T> = de
        .iter()
        .zip(&f.e)
        .map(|(&g, &e)| g * (T::one() - e * e))
        .collect();
    let (g_table, rest) = grad.split_at_mut(table_len);
    let (g_w, rest) = rest.split_at_mut(w_len);
    let g_b = &mut rest[..eo];
    for (gb, &d) in g_b.iter_mut().zip(&dz) {
        *gb += d;
    }
    for (j, &xj) in f.x.iter().enumerate() {
        for (gw, &d) in g_w[j * eo..(j + 1) * eo].iter_mut().zip(&dz) {
            *gw += xj * d;
        }
    }
    let dx: Vec<T> = (0..el)
        .map(|j| dot(&p.proj_weights[j * eo..(j + 1) * eo], &dz))
        .collect();
    for &(u, w) in &s.labels {
        for (gt, &d) in g_table[u * el..(u + 1) * el].iter_mut().zip(&dx) {
            *gt += w * d;
        }
    }
}

/// Loss of one pair; adds its gradient into `grad` (flat order) and returns the loss.
fn pair_step<T: Scalar>(
    p: &EncoderParams<T>,
    a: &Pooled<T>,
    b: &Pooled<T>,
    y: T,
    grad: &mut [T],
) -> T {
    let (fa, fb) = (forward(p, a), forward(p, b));
    let (cos, na, nb) = pair_cos(&fa.e, &fb.e);
    let s = p.scale * cos + p.offset;
    let loss = softplus(s) - y * s;
    let g = sigmoid(s) - y;
    let n = grad.len();
    grad[n - 2] += g * cos;
    grad[n - 1] += g;
    if na > T::zero() && nb > T::zero() {
        let gc = g * p.scale;
        let inv = T::one() / (na * nb);
        let de_a: Vec<T> =
            fa.e.iter()
                .zip(&fb.e)
                .map(|(&ea, &eb)| gc * (eb * inv - cos * ea / (na * na)))
                .collect();
        let de_b: Vec<T> =
            fb.e.iter()
                .zip(&fa.e)
                .map(|(&eb, &ea)| gc * (ea * inv - cos * eb / (nb * nb)))
                .collect();
        backward_side(p, a, &fa, &de_a, grad);
        backward_side(p, b, &fb, &de_b, grad);
    }
    loss
}

/// Binary cross-entropy of one pair.
pub fn pair_loss<T: Scalar>(
    params: &EncoderParams<T>,
    a: &DcuTuple,
    b: &DcuTuple,
    is_clone: bool,
) -> Result<T, EncoderError> {
    let (pa, pb) = (pool(a, params.rows)?, pool(b, params.rows)?);
    let (fa, fb) = (forward(params, &pa), forward(params, &pb));
    let s = params.scale * pair_cos(&fa.e, &fb.e).0 + params.offset;
    let y = if is_clone { T::one() } else { T::zero() };
    Ok(softplus(s) - y * s)
}

/// Loss of one pair and its analytic gradient in [`EncoderParams::flat`] order.
pub fn pair_loss_gradient<T: Scalar>(
    params: &EncoderParams<T>,
    a: &DcuTuple,
    b: &DcuTuple,
    is_clone: bool,
) -> Result<(T, Vec<T>), EncoderError> {
    let (pa, pb) = (pool(a, params.rows)?, pool(b, params.rows)?);
    let mut grad = vec![T::zero(); params.parameter_count()];
    let y = if is_clone { T::one() } else { T::zero() };
    let loss = pair_step(params, &pa, &pb, y, &mut grad);
    Ok((loss, grad))
}

#[derive(Debug, Clone)]
pub struct TrainedEncoder<T> {
    pub params: EncoderParams<T>,
    /// Mean pair loss of each epoch, accumulated during the pass.
    pub epoch_losses: Vec<f64>,
}

type PooledPairs<T> = Vec<(Pooled<T>, Pooled<T>, T)>;

fn pooled_pairs<T: Scalar>(
    rows: usize,
    tuples: &BTreeMap<String, DcuTuple>,
    pairs: &[ClonePair],
) -> Result<PooledPairs<T>, EncoderError> {
    let get = |id: &str| {
        tuples
            .get(id)
            .ok_or_else(|| EncoderError::MissingTuple(id.to_string()))
    };
    pairs
        .iter()
        .map(|p| {
            let y = if p.is_clone { T::one() } else { T::zero() };
            Ok((pool(get(&p.id_a)?, rows)?, pool(get(&p.id_b)?, rows)?, y))
        })
        .collect()
}

/// Trains a copy of `params` on the labelled pairs.
pub fn train_encoder<T: Scalar>(
    params: &EncoderParams<T>,
    tuples: &BTreeMap<String, DcuTuple>,
    pairs: &[ClonePair],
    config: &EncoderConfig,
) -> Result<TrainedEncoder<T>, EncoderError> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(EncoderError::NoPairs);
    }
    let data = pooled_pairs(params.rows, tuples, pairs)?;
    let mut p = params.clone();
    let mut theta = p.flat();
    let mut velocity = vec![T::zero(); theta.len()];
    let mut grad = vec![T::zero(); theta.len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7261_696e);
    let (lr, mu) = (T::cast(config.learning_rate), T::cast(config.momentum));
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = T::zero());
            for &i in batch {
                let (a, b, y) = &data[i];
                total += pair_step(&p, a, b, *y, &mut grad).as_f64();
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
            return Err(EncoderError::NonFiniteLoss { epoch });
        }
        epoch_losses.push(mean);
    }
    Ok(TrainedEncoder {
        params: p,
        epoch_losses,
    })
}

/// Clone probability `sigmoid(scale * cos + offset)` for each pair.
pub fn pair_probabilities<T: Scalar>(
    params: &EncoderParams<T>,
    tuples: &BTreeMap<String, DcuTuple>,
    pairs: &[ClonePair],
) -> Result<Vec<f64>, EncoderError> {
    let data = pooled_pairs::<T>(params.rows, tuples, pairs)?;
    Ok(data
        .iter()
        .map(|(a, b, _)| {
            let (fa, fb) = (forward(params, a), forward(params, b));
            sigmoid(params.scale * pair_cos(&fa.e, &fb.e).0 + params.offset).as_f64()
        })
        .collect())
}

/// Fraction of pairs classified correctly at probability threshold 0.5.
pub fn pair_accuracy<T: Scalar>(
    params: &EncoderParams<T>,
    tuples: &BTreeMap<String, DcuTuple>,
    pairs: &[ClonePair],
) -> Result<f64, EncoderError> {
    if pairs.is_empty() {
        return Err(EncoderError::NoPairs);
    }
    let probs = pair_probabilities(params, tuples, pairs)?;
    let correct = probs
        .iter()
        .zip(pairs)
        .filter(|(&p, pair)| (p >= 0.5) == pair.is_clone)
        .count();
    Ok(correct as f64 / pairs.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderCheckpoint {
    pub params: EncoderParams<f32>,
    pub stamp: String,
}

/// Checkpoint bytes: `DCPM`, version, rows, e_label, e_out (u32 each), seed
/// (u64), stamp (u32 length + UTF-8), then every parameter as f32 in flat order.
pub fn checkpoint_bytes<T: Scalar>(params: &EncoderParams<T>, stamp: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + stamp.len() + 4 * params.parameter_count());
    out.extend_from_slice(MAGIC);
    binio::put_u32(&mut out, CHECKPOINT_VERSION);
    binio::put_u32(&mut out, params.rows as u32);
    binio::put_u32(&mut out, params.e_label as u32);
    binio::put_u32(&mut out, params.e_out as u32);
    binio::put_u64(&mut out, params.seed);
    binio::put_str(&mut out, stamp);
    for v in params.flat() {
        binio::put_f32(&mut out, v.as_f64() as f32);
    }
    out
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<EncoderCheckpoint, EncoderError> {
    let mut r = Reader::new(bytes);
    let corrupt = |t: binio::Truncated| EncoderError::CorruptCheckpoint { offset: t.offset };
    if r.take(4).map_err(|_| EncoderError::BadMagic)? != MAGIC {
        return Err(EncoderError::BadMagic);
    }
    let version = r.u32().map_err(corrupt)?;
    if version != CHECKPOINT_VERSION {
        return Err(EncoderError::VersionMismatch { found: version });
    }
    let rows = r.u32().map_err(corrupt)? as usize;
    let e_label = r.u32().map_err(corrupt)? as usize;
    let e_out = r.u32().map_err(corrupt)? as usize;
    let seed = r.u64().map_err(corrupt)?;
    let at = r.pos();
    let stamp = r
        .string()
        .map_err(corrupt)?
        .ok_or(EncoderError::CorruptCheckpoint { offset: at })?;
    let mut params = EncoderParams::<f32>::zeros(rows, e_label, e_out);
    params.seed = seed;
    let n = params.parameter_count();
    if r.remaining() != 4 * n {
        return Err(EncoderError::CorruptCheckpoint {
            offset: r.pos() + r.remaining().min(4 * n),
        });
    }
    let values = r.f32s(n).map_err(corrupt)?;
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(EncoderError::CorruptCheckpoint {
            offset: at + 4 + stamp.len() + 4 * i,
        });
    }
    params.set_flat(&values);
    Ok(EncoderCheckpoint { params, stamp })
}

pub fn save_checkpoint<T: Scalar>(
    path: impl AsRef<Path>,
    params: &EncoderParams<T>,
    stamp: &str,
) -> Result<(), EncoderError> {
    let mut w = crate::records::create(path.as_ref())?;
    w.write_all(&checkpoint_bytes(params, stamp))?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<EncoderCheckpoint, EncoderError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{RawNode, SyntaxTree};
    use crate::tuples::tree_to_dcu;

    fn small_config(e_label: usize, e_out: usize, seed: u64) -> EncoderConfig {
        EncoderConfig {
            e_label,
            e_out,
            seed,
            ..EncoderConfig::default()
        }
    }

    fn vocab() -> Vocabulary {
        Vocabulary::from_ordered(["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect())
    }

    fn tuple(raw: RawNode) -> DcuTuple {
        tree_to_dcu(&SyntaxTree::from_raw(raw), &vocab())
    }

    #[test]
    fn init_is_seeded() {
        let v = Vocabulary::from_ordered((0..10).map(|i| format!("t{i}")).collect());
        let a: EncoderParams<f64> = init_encoder(&small_config(8, 4, 1), &v);
        let b: EncoderParams<f64> = init_encoder(&small_config(8, 4, 1), &v);
        let c: EncoderParams<f64> = init_encoder(&small_config(8, 4, 2), &v);
        assert_eq!(a, b);
        assert_ne!(a.label_table, c.label_table);
        assert_eq!((a.rows, a.label_table.len()), (11, 88));
        assert!(a
            .flat()
            .iter()
            .take(a.parameter_count() - 2)
            .all(|x| x.abs() <= 0.05));
        assert_eq!((a.scale, a.offset), (1.0, 0.0));
    }

    #[test]
    fn zero_params_give_zero_embedding() {
        let p = EncoderParams::<f64>::zeros(5, 3, 4);
        assert_eq!(encode(&p, &tuple(RawNode::new("A"))).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn forward_matches_hand_computation() {
        // A(B(C), D, B) has 5 nodes; permuting siblings keeps the pooled features.
        let t1 = tuple(RawNode::new("A").with_children(vec![
            RawNode::new("B").with_child(RawNode::new("C")),
            RawNode::new("D"),
            RawNode::new("B"),
        ]));
        let t2 = tuple(RawNode::new("A").with_children(vec![
            RawNode::new("D"),
            RawNode::new("B"),
            RawNode::new("B").with_child(RawNode::new("C")),
        ]));
        assert_ne!(t1.c, t2.c);
        let p: EncoderParams<f64> = init_with_rows(&small_config(2, 3, 9), 5);
        let row = |u: usize| &p.label_table[u * 2..u * 2 + 2];
        // u = [A, B, D, B, C] -> indices [0, 1, 3, 1, 2]; d sums to 15; child counts sum to 4.
        let mut x = [0.0; 4];
        for u in [0usize, 1, 3, 1, 2] {
            x[0] += row(u)[0] / 5.0;
            x[1] += row(u)[1] / 5.0;
        }
        x[2] = 15.0 / 25.0;
        x[3] = 4.0 / 5.0;
        let expected: Vec<f64> = (0..3)
            .map(|o| {
                (p.proj_bias[o]
                    + (0..4)
                        .map(|j| x[j] * p.proj_weights[j * 3 + o])
                        .sum::<f64>())
                .tanh()
            })
            .collect();
        for e in [encode(&p, &t1).unwrap(), encode(&p, &t2).unwrap()] {
            for (a, b) in e.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_unusable_tuples() {
        let p = EncoderParams::<f64>::zeros(2, 2, 2);
        let t = tuple(RawNode::new("D"));
        assert!(matches!(
            encode(&p, &t),
            Err(EncoderError::IndexOutOfRange { index: 3, rows: 2 })
        ));
        let mut g = tuple(RawNode::new("A"));
        g.kind = TupleKind::FlowGraph;
        assert!(matches!(
            encode(&p, &g),
            Err(EncoderError::UnsupportedKind(_))
        ));
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let a = tuple(RawNode::new("A").with_children(vec![RawNode::new("B"), RawNode::new("C")]));
        let b =
            tuple(RawNode::new("A").with_child(RawNode::new("D").with_child(RawNode::new("B"))));
        for point in 0..10u64 {
            let mut p: EncoderParams<f64> = init_with_rows(&small_config(3, 2, point), 5);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + point);
            let theta: Vec<f64> = p.flat().iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
            p.set_flat(&theta);
            let is_clone = point % 2 == 0;
            let (_, grad) = pair_loss_gradient(&p, &a, &b, is_clone).unwrap();
            let h = 1e-5;
            for i in 0..theta.len() {
                let mut q = p.clone();
                let mut t = theta.clone();
                t[i] += h;
                q.set_flat(&t);
                let up = pair_loss(&q, &a, &b, is_clone).unwrap();
                t[i] -= 2.0 * h;
                q.set_flat(&t);
                let down = pair_loss(&q, &a, &b, is_clone).unwrap();
                let numeric = (up - down) / (2.0 * h);
                assert!(
                    rel_err(grad[i], numeric) < 1e-4,
                    "point {point} coord {i}: {} vs {numeric}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn duplicated_clone_pair_loss_decreases() {
        let tuples: BTreeMap<String, DcuTuple> = [
            (
                "a".to_string(),
                tuple(RawNode::new("A").with_child(RawNode::new("B"))),
            ),
            (
                "b".to_string(),
                tuple(RawNode::new("A").with_child(RawNode::new("C"))),
            ),
        ]
        .into();
        let pair = ClonePair {
            id_a: "a".into(),
            id_b: "b".into(),
            is_clone: true,
            clone_type: None,
        };
        let config = EncoderConfig {
            epochs: 10,
            e_label: 4,
            e_out: 8,
            momentum: 0.0,
            ..EncoderConfig::default()
        };
        let p: EncoderParams<f64> = init_with_rows(&config, 5);
        let trained = train_encoder(&p, &tuples, &[pair.clone(), pair], &config).unwrap();
        for w in trained.epoch_losses.windows(2) {
            assert!(w[1] < w[0], "{:?}", trained.epoch_losses);
        }
        assert!(matches!(
            train_encoder(&p, &tuples, &[], &config),
            Err(EncoderError::NoPairs)
        ));
    }

    #[test]
    fn checkpoint_round_trip() {
        let p: EncoderParams<f64> = init_with_rows(&small_config(3, 4, 5), 6);
        let bytes = checkpoint_bytes(&p, "cfg:abc/seed:5");
        assert_eq!(bytes.len(), 4 + 16 + 8 + 4 + 14 + 4 * p.parameter_count());
        let back = parse_checkpoint(&bytes).unwrap();
        assert_eq!(back.stamp, "cfg:abc/seed:5");
        assert_eq!(back.params.cast::<f64>(), p.rounded_to_f32());
        assert!(matches!(
            parse_checkpoint(&bytes[..bytes.len() - 3]),
            Err(EncoderError::CorruptCheckpoint { .. })
        ));
        assert!(matches!(
            parse_checkpoint(b"XXXX"),
            Err(EncoderError::BadMagic)
        ));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(
            parse_checkpoint(&v2),
            Err(EncoderError::VersionMismatch { found: 2 })
        ));
    }
}
