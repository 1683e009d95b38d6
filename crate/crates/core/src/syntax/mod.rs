//! Source code to [`SyntaxTree`], CFG ingestion, and statement-tree splitting.
//!
//! Python and Java are parsed by hand-written recursive-descent parsers with a
//! fixed, documented label set per language (see `python` and `java`). C
//! samples are rejected with [`SyntaxError::UnsupportedLanguage`].

pub mod flowgraph;
pub mod java;
pub mod python;
pub mod statements;
mod tree;

use thiserror::Error;

pub use flowgraph::{load_flowgraphs, FlowGraph, GraphError};
pub use statements::{split_statements, StatementLabels};
pub use tree::{RawNode, SyntaxNode, SyntaxTree, TreeError};

use crate::corpus::{CodeSample, Language};

/// A syntactically invalid input, located by byte offset and line/column (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at(src: &str, offset: usize, message: impl Into<String>) -> Self {
        let offset = offset.min(src.len());
        let before = &src.as_bytes()[..offset];
        let line = 1 + before.iter().filter(|&&b| b == b'\n').count();
        let column = 1 + before.iter().rev().take_while(|&&b| b != b'\n').count();
        ParseError {
            offset,
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("sample {sample_id}: {source}")]
    Parse {
        sample_id: String,
        #[source]
        source: ParseError,
    },
    #[error("no parser for language {0}")]
    UnsupportedLanguage(Language),
}

/// Parses raw source text of the given language.
pub fn parse_source(language: Language, src: &str) -> Result<SyntaxTree, SyntaxError> {
    let raw = match language {
        Language::Python => python::parse(src),
        Language::Java => java::parse(src),
        Language::C => return Err(SyntaxError::UnsupportedLanguage(language)),
    }
    .map_err(|source| SyntaxError::Parse {
        sample_id: String::new(),
        source,
    })?;
    Ok(SyntaxTree::from_raw(raw))
}

/// Parses a corpus sample into a breadth-first numbered tree.
pub fn parse_to_tree(sample: &CodeSample) -> Result<SyntaxTree, SyntaxError> {
    parse_source(sample.language, &sample.source_text).map_err(|e| match e {
        SyntaxError::Parse { source, .. } => SyntaxError::Parse {
            sample_id: sample.id.clone(),
            source,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_error_location() {
        let e = ParseError::at("ab\ncd", 4, "boom");
        assert_eq!((e.line, e.column), (2, 2));
        assert_eq!(e.to_string(), "line 2, column 2: boom");
    }

    #[test]
    fn c_is_unsupported() {
        let s = CodeSample::new("c1", Language::C, "int main() { return 0; }");
        assert_eq!(
            parse_to_tree(&s),
            Err(SyntaxError::UnsupportedLanguage(Language::C))
        );
    }

    #[test]
    fn parse_errors_carry_sample_id() {
        let s = CodeSample::new("bad", Language::Python, "def f(:\n    pass\n");
        match parse_to_tree(&s) {
            Err(SyntaxError::Parse { sample_id, source }) => {
                assert_eq!(sample_id, "bad");
                assert_eq!(source.line, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
