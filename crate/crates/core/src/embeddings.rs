//! Embedding interchange files.
//!
//! Binary layout, all integers little-endian `u32` unless noted:
//!
//! ```text
//! "DCPE" version width count source_len source stamp_len stamp
//! count × ( id_len id layer_len layer trained:u8 width × f32 )
//! ```
//!
//! Strings are UTF-8. The text variant is line-delimited JSON: a header line
//! `{"format":"DCPE-TEXT","version":1,"width":..,"source":..,"stamp":..}`
//! followed by one `{"sample_id","layer","trained","vector"}` object per line.
//! [`read_embeddings`] accepts either.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binio::{self, Reader};
use crate::records;

const MAGIC: &[u8; 4] = b"DCPE";
const TEXT_FORMAT: &str = "DCPE-TEXT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("embedding set is empty")]
    EmptySet,
    #[error("sample {sample_id}: width {found}, expected {expected}")]
    WidthMismatch {
        sample_id: String,
        expected: usize,
        found: usize,
    },
    #[error("sample {0}: non-finite value")]
    NonFinite(String),
    #[error("duplicate record for sample {sample_id} (layer {layer}, trained {trained})")]
    DuplicateRecord {
        sample_id: String,
        layer: String,
        trained: bool,
    },
    #[error("not an embedding file")]
    BadMagic,
    #[error("format version {found}, expected {FORMAT_VERSION}")]
    VersionMismatch { found: u32 },
    #[error("corrupt record at byte {offset}")]
    CorruptRecord { offset: usize },
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub sample_id: String,
    pub layer: String,
    pub trained: bool,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    source: String,
    stamp: String,
    width: usize,
    records: Vec<EmbeddingRecord>,
}

impl EmbeddingSet {
    /// Validates width, finiteness and (sample, layer, trained) uniqueness.
    pub fn new(
        source: impl Into<String>,
        stamp: impl Into<String>,
        records: Vec<EmbeddingRecord>,
    ) -> Result<Self, EmbeddingError> {
        let width = records
            .first()
            .ok_or(EmbeddingError::EmptySet)?
            .vector
            .len();
        let mut seen = HashSet::new();
        for r in &records {
            if r.vector.len() != width {
                return Err(EmbeddingError::WidthMismatch {
                    sample_id: r.sample_id.clone(),
                    expected: width,
                    found: r.vector.len(),
                });
            }
            if r.vector.iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::NonFinite(r.sample_id.clone()));
            }
            if !seen.insert((r.sample_id.as_str(), r.layer.as_str(), r.trained)) {
                return Err(EmbeddingError::DuplicateRecord {
                    sample_id: r.sample_id.clone(),
                    layer: r.layer.clone(),
                    trained: r.trained,
                });
            }
        }
        Ok(EmbeddingSet {
            source: source.into(),
            stamp: stamp.into(),
            width,
            records,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Stamp of the run that produced the set; empty for foreign files.
    pub fn stamp(&self) -> &str {
        &self.stamp
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    /// First record for `sample_id`. Sets mixing layers or trained flags
    /// should be narrowed with [`select`](Self::select) first.
    pub fn get(&self, sample_id: &str) -> Option<&EmbeddingRecord> {
        self.records.iter().find(|r| r.sample_id == sample_id)
    }

    pub fn vector(&self, sample_id: &str) -> Option<&[f32]> {
        self.get(sample_id).map(|r| r.vector.as_slice())
    }

    /// Records matching the given layer and/or trained flag.
    pub fn select(
        &self,
        layer: Option<&str>,
        trained: Option<bool>,
    ) -> Result<Self, EmbeddingError> {
        let records = self
            .records
            .iter()
            .filter(|r| {
                layer.is_none_or(|l| r.layer == l) && trained.is_none_or(|t| r.trained == t)
            })
            .cloned()
            .collect();
        EmbeddingSet::new(self.source.clone(), self.stamp.clone(), records)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let record_len: usize = self
            .records
            .iter()
            .map(|r| 9 + r.sample_id.len() + r.layer.len() + 4 * self.width)
            .sum();
        let mut out = Vec::with_capacity(24 + self.source.len() + self.stamp.len() + record_len);
        out.extend_from_slice(MAGIC);
        binio::put_u32(&mut out, FORMAT_VERSION);
        binio::put_u32(&mut out, self.width as u32);
        binio::put_u32(&mut out, self.records.len() as u32);
        binio::put_str(&mut out, &self.source);
        binio::put_str(&mut out, &self.stamp);
        for r in &self.records {
            binio::put_str(&mut out, &r.sample_id);
            binio::put_str(&mut out, &r.layer);
            out.push(r.trained as u8);
            for &v in &r.vector {
                binio::put_f32(&mut out, v);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EmbeddingError> {
        let mut r = Reader::new(bytes);
        let corrupt = |t: binio::Truncated| EmbeddingError::CorruptRecord { offset: t.offset };
        if r.take(4).map_err(|_| EmbeddingError::BadMagic)? != MAGIC {
            return Err(EmbeddingError::BadMagic);
        }
        let version = r.u32().map_err(corrupt)?;
        if version != FORMAT_VERSION {
            return Err(EmbeddingError::VersionMismatch { found: version });
        }
        let width = r.u32().map_err(corrupt)? as usize;
        let count = r.u32().map_err(corrupt)? as usize;
        let string = |r: &mut Reader| {
            let at = r.pos();
            r.string()
                .map_err(corrupt)?
                .ok_or(EmbeddingError::CorruptRecord { offset: at })
        };
        let source = string(&mut r)?;
        let stamp = string(&mut r)?;
        let mut records = Vec::with_capacity(count.min(r.remaining() / (9 + 4 * width).max(1)));
        for _ in 0..count {
            let start = r.pos();
            let sample_id = string(&mut r)?;
            let layer = string(&mut r)?;
            let trained = match r.u8().map_err(corrupt)? {
                0 => false,
                1 => true,
                _ => {
                    return Err(EmbeddingError::CorruptRecord {
                        offset: r.pos() - 1,
                    })
                }
            };
            let vector = r.f32s(width).map_err(corrupt)?;
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::CorruptRecord { offset: start });
            }
            records.push(EmbeddingRecord {
                sample_id,
                layer,
                trained,
                vector,
            });
        }
        if r.remaining() != 0 {
            return Err(EmbeddingError::CorruptRecord { offset: r.pos() });
        }
        let set = EmbeddingSet::new(source, stamp, records)?;
        if set.width != width {
            return Err(EmbeddingError::CorruptRecord { offset: 8 });
        }
        Ok(set)
    }

    pub fn write_text(&self, writer: &mut impl Write) -> Result<(), EmbeddingError> {
        let header = TextHeader {
            format: TEXT_FORMAT.to_string(),
            version: FORMAT_VERSION,
            width: self.width,
            source: self.source.clone(),
            stamp: self.stamp.clone(),
        };
        records::write_record(writer, &header)?;
        for r in &self.records {
            records::write_record(writer, r)?;
        }
        Ok(())
    }

    pub fn read_text(reader: impl BufRead) -> Result<Self, EmbeddingError> {
        let malformed =
            |line: usize, message: String| EmbeddingError::MalformedLine { line, message };
        let mut header: Option<TextHeader> = None;
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match &header {
                None => {
                    let h: TextHeader =
                        serde_json::from_str(&line).map_err(|_| EmbeddingError::BadMagic)?;
                    if h.format != TEXT_FORMAT {
                        return Err(EmbeddingError::BadMagic);
                    }
                    if h.version != FORMAT_VERSION {
                        return Err(EmbeddingError::VersionMismatch { found: h.version });
                    }
                    header = Some(h);
                }
                Some(h) => {
                    let r: EmbeddingRecord =
                        serde_json::from_str(&line).map_err(|e| malformed(i + 1, e.to_string()))?;
                    if r.vector.len() != h.width {
                        return Err(malformed(
                            i + 1,
                            format!("width {}, header says {}", r.vector.len(), h.width),
                        ));
                    }
                    records.push(r);
                }
            }
        }
        let h = header.ok_or(EmbeddingError::BadMagic)?;
        EmbeddingSet::new(h.source, h.stamp, records)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TextHeader {
    format: String,
    version: u32,
    width: usize,
    source: String,
    #[serde(default)]
    stamp: String,
}

fn io_err(path: &Path, e: std::io::Error) -> std::io::Error {
    std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

/// Writes the binary variant.
pub fn write_embeddings(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
    let path = path.as_ref();
    let mut w = records::create(path)?;
    w.write_all(&set.to_bytes()).map_err(|e| io_err(path, e))?;
    w.flush()?;
    Ok(())
}

pub fn write_embeddings_text(
    set: &EmbeddingSet,
    path: impl AsRef<Path>,
) -> Result<(), EmbeddingError> {
    let mut w = records::create(path.as_ref())?;
    set.write_text(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads either variant, telling them apart by the leading bytes.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet, EmbeddingError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    parse_embeddings(&bytes)
}

pub fn parse_embeddings(bytes: &[u8]) -> Result<EmbeddingSet, EmbeddingError> {
    if bytes.starts_with(MAGIC) {
        return EmbeddingSet::from_bytes(bytes);
    }
    match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') => EmbeddingSet::read_text(bytes),
        _ => Err(EmbeddingError::BadMagic),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, vector: Vec<f32>) -> EmbeddingRecord {
        EmbeddingRecord {
            sample_id: id.into(),
            layer: "pooling".into(),
            trained: true,
            vector,
        }
    }

    #[test]
    fn single_record_round_trip() {
        let set =
            EmbeddingSet::new("ref", "s", vec![record("a", vec![1.0, -2.5, 0.0, 3.25])]).unwrap();
        let bytes = set.to_bytes();
        assert_eq!(&bytes[..4], b"DCPE");
        assert_eq!(EmbeddingSet::from_bytes(&bytes).unwrap(), set);
        assert_eq!(EmbeddingSet::from_bytes(&bytes).unwrap().to_bytes(), bytes);
    }

    #[test]
    fn mixed_widths_are_rejected() {
        let err = EmbeddingSet::new(
            "ref",
            "",
            vec![record("a", vec![0.0; 4]), record("b", vec![0.0; 8])],
        );
        assert!(matches!(
            err,
            Err(EmbeddingError::WidthMismatch {
                expected: 4,
                found: 8,
                ..
            })
        ));
        assert!(matches!(
            EmbeddingSet::new("ref", "", vec![]),
            Err(EmbeddingError::EmptySet)
        ));
        let dup = EmbeddingSet::new(
            "ref",
            "",
            vec![record("a", vec![0.0]), record("a", vec![1.0])],
        );
        assert!(matches!(dup, Err(EmbeddingError::DuplicateRecord { .. })));
        assert!(matches!(
            EmbeddingSet::new("ref", "", vec![record("a", vec![f32::NAN])]),
            Err(EmbeddingError::NonFinite(_))
        ));
    }

    #[test]
    fn file_size_follows_the_layout() {
        let records: Vec<_> = (0..1000)
            .map(|i| record(&format!("s{i:04}"), vec![0.5; 64]))
            .collect();
        let set = EmbeddingSet::new("model", "", records).unwrap();
        // header: magic, version, width, count, source, stamp
        let header = 4 + 4 + 4 + 4 + (4 + 5) + 4;
        // id block: id (4 + 5), layer (4 + 7), trained flag
        let id_block = (4 + 5) + (4 + 7) + 1;
        assert_eq!(set.to_bytes().len(), header + 1000 * (id_block + 256));
    }

    #[test]
    fn damaged_files() {
        let set = EmbeddingSet::new(
            "ref",
            "",
            vec![record("a", vec![1.0; 3]), record("b", vec![2.0; 3])],
        )
        .unwrap();
        let bytes = set.to_bytes();
        let cut = &bytes[..bytes.len() - 2];
        assert!(matches!(
            EmbeddingSet::from_bytes(cut),
            Err(EmbeddingError::CorruptRecord { .. })
        ));
        assert!(matches!(
            parse_embeddings(b"NOPE...."),
            Err(EmbeddingError::BadMagic)
        ));
        let mut v = bytes.clone();
        v[4] = 9;
        assert!(matches!(
            EmbeddingSet::from_bytes(&v),
            Err(EmbeddingError::VersionMismatch { found: 9 })
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(
            EmbeddingSet::from_bytes(&extra),
            Err(EmbeddingError::CorruptRecord { .. })
        ));
    }

    #[test]
    fn text_variant() {
        let text = "{\"format\":\"DCPE-TEXT\",\"version\":1,\"width\":2,\"source\":\"hand\"}\n\
                    {\"sample_id\":\"a\",\"layer\":\"encoder\",\"trained\":false,\"vector\":[0.5,1.0]}\n";
        let set = parse_embeddings(text.as_bytes()).unwrap();
        assert_eq!((set.width(), set.source(), set.len()), (2, "hand", 1));
        assert_eq!(set.vector("a"), Some(&[0.5f32, 1.0][..]));
        let mut out = Vec::new();
        set.write_text(&mut out).unwrap();
        assert_eq!(parse_embeddings(&out).unwrap(), set);
        let bad = "{\"format\":\"DCPE-TEXT\",\"version\":1,\"width\":3,\"source\":\"hand\"}\n\
                   {\"sample_id\":\"a\",\"layer\":\"encoder\",\"trained\":false,\"vector\":[0.5,1.0]}\n";
        assert!(matches!(
            parse_embeddings(bad.as_bytes()),
            Err(EmbeddingError::MalformedLine { line: 2, .. })
        ));
    }

    #[test]
    fn select_narrows_mixed_sets() {
        let mut untrained = record("a", vec![0.0, 1.0]);
        untrained.trained = false;
        let set =
            EmbeddingSet::new("ref", "", vec![record("a", vec![1.0, 0.0]), untrained]).unwrap();
        let only = set.select(Some("pooling"), Some(false)).unwrap();
        assert_eq!(only.vector("a"), Some(&[0.0f32, 1.0][..]));
        assert!(matches!(
            set.select(Some("recurrent"), None),
            Err(EmbeddingError::EmptySet)
        ));
    }
}
