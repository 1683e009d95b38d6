//! Token to index vocabularies.
//!
//! Indices are assigned by descending corpus frequency, ties broken
//! lexicographically. Any token not in the vocabulary maps to
//! `max_token_index`, which equals the entry count.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records;
use crate::syntax::SyntaxTree;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("no tokens to build a vocabulary from")]
    EmptyCorpus,
    #[error("min_count must be at least 1")]
    InvalidMinCount,
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    max_token_index: u32,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    token: String,
    index: u32,
}

impl Vocabulary {
    /// Builds from already ordered tokens; index `i` goes to `tokens[i]`.
    pub fn from_ordered(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens, index }
    }

    /// Counts tokens and orders them by frequency, then lexicographically.
    pub fn from_counts<S: AsRef<str>>(
        tokens: impl IntoIterator<Item = S>,
        min_count: usize,
    ) -> Result<Self, VocabError> {
        if min_count == 0 {
            return Err(VocabError::InvalidMinCount);
        }
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for token in tokens {
            *counts.entry(token.as_ref().to_string()).or_default() += 1;
        }
        if counts.is_empty() {
            return Err(VocabError::EmptyCorpus);
        }
        let mut ranked: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(_, n)| *n >= min_count)
            .collect();
        // BTreeMap iteration is already lexicographic; a stable sort keeps it for ties.
        ranked.sort_by_key(|e| std::cmp::Reverse(e.1));
        Ok(Self::from_ordered(
            ranked.into_iter().map(|(t, _)| t).collect(),
        ))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The out-of-vocabulary index, equal to the number of entries.
    pub fn max_token_index(&self) -> u32 {
        self.tokens.len() as u32
    }

    pub fn lookup(&self, token: &str) -> u32 {
        self.index
            .get(token)
            .copied()
            .unwrap_or(self.max_token_index())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Inverse lookup; `None` for the OOV index and beyond.
    pub fn token(&self, index: u32) -> Option<&str> {
        self.tokens.get(index as usize).map(String::as_str)
    }

    /// Tokens in index order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn write(&self, writer: &mut impl Write) -> Result<(), VocabError> {
        records::write_record(
            writer,
            &Header {
                max_token_index: self.max_token_index(),
            },
        )?;
        for (i, token) in self.tokens.iter().enumerate() {
            records::write_record(
                writer,
                &Entry {
                    token: token.clone(),
                    index: i as u32,
                },
            )?;
        }
        Ok(())
    }

    pub fn read(reader: impl BufRead) -> Result<Self, VocabError> {
        let mut lines = reader.lines().enumerate();
        let malformed =
            |line: usize, message: String| VocabError::MalformedRecord { line, message };
        let header: Header = loop {
            match lines.next() {
                None => return Err(malformed(1, "missing header".into())),
                Some((i, line)) => {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break serde_json::from_str(&line)
                        .map_err(|e| malformed(i + 1, e.to_string()))?;
                }
            }
        };
        let mut tokens = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: Entry =
                serde_json::from_str(&line).map_err(|e| malformed(i + 1, e.to_string()))?;
            if entry.index as usize != tokens.len() {
                return Err(malformed(
                    i + 1,
                    format!("expected index {}, found {}", tokens.len(), entry.index),
                ));
            }
            tokens.push(entry.token);
        }
        if header.max_token_index as usize != tokens.len() {
            return Err(malformed(
                1,
                format!(
                    "header max_token_index {} but {} entries",
                    header.max_token_index,
                    tokens.len()
                ),
            ));
        }
        let vocab = Self::from_ordered(tokens);
        if vocab.index.len() != vocab.tokens.len() {
            return Err(malformed(1, "duplicate token".into()));
        }
        Ok(vocab)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), VocabError> {
        let mut w = records::create(path.as_ref())?;
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VocabError> {
        Self::read(records::open(path.as_ref())?)
    }
}

/// Vocabulary over node tokens: leaf text for leaves that carry it,
/// grammar labels otherwise.
pub fn build_vocabulary<'a>(
    trees: impl IntoIterator<Item = &'a SyntaxTree>,
    min_count: usize,
) -> Result<Vocabulary, VocabError> {
    Vocabulary::from_counts(trees.into_iter().flat_map(SyntaxTree::tokens), min_count)
}

/// Vocabulary over raw grammar labels only.
pub fn build_label_vocabulary<'a>(
    trees: impl IntoIterator<Item = &'a SyntaxTree>,
    min_count: usize,
) -> Result<Vocabulary, VocabError> {
    Vocabulary::from_counts(trees.into_iter().flat_map(SyntaxTree::labels), min_count)
}

pub fn lookup(vocab: &Vocabulary, token: &str) -> u32 {
    vocab.lookup(token)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counted(entries: &[(&str, usize)], min_count: usize) -> Vocabulary {
        let tokens = entries
            .iter()
            .flat_map(|(t, n)| std::iter::repeat_n(*t, *n));
        Vocabulary::from_counts(tokens, min_count).unwrap()
    }

    #[test]
    fn frequency_order_with_min_count() {
        let v = counted(&[("c", 1), ("a", 5), ("b", 3)], 2);
        assert_eq!(v.tokens(), ["a", "b"]);
        assert_eq!(v.lookup("a"), 0);
        assert_eq!(v.lookup("b"), 1);
        assert_eq!(v.max_token_index(), 2);
        assert_eq!(v.lookup("c"), 2);
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = counted(&[("x", 2), ("m", 2)], 1);
        assert_eq!(v.tokens(), ["m", "x"]);
    }

    #[test]
    fn unknown_and_empty_tokens_are_oov() {
        let v = counted(&[("a", 1)], 1);
        assert_eq!(v.lookup("zzz"), v.max_token_index());
        assert_eq!(v.lookup(""), v.max_token_index());
        assert_eq!(v.token(v.max_token_index()), None);
        assert_eq!(v.token(0), Some("a"));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            Vocabulary::from_counts(Vec::<&str>::new(), 1),
            Err(VocabError::EmptyCorpus)
        ));
        assert!(matches!(
            Vocabulary::from_counts(["a"], 0),
            Err(VocabError::InvalidMinCount)
        ));
    }

    #[test]
    fn file_round_trip() {
        let v = counted(&[("Name", 4), ("x", 2), ("\"q\"", 1)], 1);
        let mut buf = Vec::new();
        v.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"max_token_index\":3}\n"));
        assert_eq!(Vocabulary::read(&buf[..]).unwrap(), v);
    }

    #[test]
    fn rejects_inconsistent_files() {
        let bad = b"{\"max_token_index\":2}\n{\"token\":\"a\",\"index\":0}\n";
        assert!(matches!(
            Vocabulary::read(&bad[..]),
            Err(VocabError::MalformedRecord { .. })
        ));
        let gap = b"{\"max_token_index\":2}\n{\"token\":\"a\",\"index\":0}\n{\"token\":\"b\",\"index\":5}\n";
        assert!(matches!(
            Vocabulary::read(&gap[..]),
            Err(VocabError::MalformedRecord { line: 3, .. })
        ));
    }
}
