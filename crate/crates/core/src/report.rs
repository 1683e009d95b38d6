//! Report records and their text renderings.
//!
//! Stored values stay in [-1, 1] or [0, 1]; percentages appear only in the
//! rendered tables.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::probe::ProbingReport;
use crate::records;
use crate::validation::{ProbeDifferential, SimilarityReport};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSource {
    Trained,
    Untrained,
}

/// One line of a report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ReportRecord {
    Representation {
        stamp: String,
        report: SimilarityReport,
    },
    Embeddings {
        stamp: String,
        seed: u64,
        report: SimilarityReport,
    },
    Probing {
        stamp: String,
        seed: u64,
        embeddings: EmbeddingSource,
        report: ProbingReport,
    },
    Differential {
        stamp: String,
        seed: u64,
        summary: ProbeDifferential,
    },
}

impl ReportRecord {
    pub fn stamp(&self) -> &str {
        match self {
            ReportRecord::Representation { stamp, .. }
            | ReportRecord::Embeddings { stamp, .. }
            | ReportRecord::Probing { stamp, .. }
            | ReportRecord::Differential { stamp, .. } => stamp,
        }
    }
}

pub fn write_reports(writer: &mut impl Write, reports: &[ReportRecord]) -> Result<(), ReportError> {
    for r in reports {
        records::write_record(writer, r)?;
    }
    Ok(())
}

pub fn read_reports(reader: impl BufRead) -> Result<Vec<ReportRecord>, ReportError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| ReportError::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

pub fn save_reports(path: impl AsRef<Path>, reports: &[ReportRecord]) -> Result<(), ReportError> {
    let mut w = records::create(path.as_ref())?;
    write_reports(&mut w, reports)?;
    w.flush()?;
    Ok(())
}

pub fn load_reports(path: impl AsRef<Path>) -> Result<Vec<ReportRecord>, ReportError> {
    read_reports(records::open(path.as_ref())?)
}

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

/// Left-aligned first column, right-aligned rest, two-space gutters.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            if i == 0 {
                let _ = write!(s, "{cell:<w$}");
            } else {
                let _ = write!(s, "{cell:>w$}");
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(rule.iter().map(String::as_str).collect());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

pub fn render_similarity(report: &SimilarityReport) -> String {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.criterion.to_string(),
                match r.trained {
                    Some(true) => "trained".into(),
                    Some(false) => "untrained".into(),
                    None => "-".into(),
                },
                r.component.to_string(),
                pct(r.mean_cosine),
                r.pair_count.to_string(),
            ]
        })
        .collect();
    table(
        &[
            "Criterion",
            "Model",
            "Component",
            "Mean cosine (%)",
            "Pairs",
        ],
        &rows,
    )
}

pub fn render_probing(report: &ProbingReport) -> String {
    let rows: Vec<Vec<String>> = report
        .components
        .iter()
        .map(|s| {
            vec![
                s.component.to_string(),
                pct(s.accuracy),
                pct(s.exact_match),
                pct(s.baseline),
                format!("{}/{}", s.correct, s.total),
            ]
        })
        .collect();
    let mut out = table(
        &[
            "Component",
            "Accuracy (%)",
            "Exact match (%)",
            "Majority (%)",
            "Slots",
        ],
        &rows,
    );
    let _ = writeln!(
        out,
        "target {}, {} samples, {} truncated, {} clamped",
        report.target,
        report.samples.len(),
        report.truncated,
        report.clamped
    );
    out
}

pub fn render_differential(summary: &ProbeDifferential) -> String {
    let rows: Vec<Vec<String>> = summary
        .deltas
        .iter()
        .map(|d| {
            vec![
                d.component.to_string(),
                pct(d.trained),
                pct(d.untrained),
                format!("{:+.2}", 100.0 * d.delta),
                if d.exceeds_margin { "yes" } else { "no" }.into(),
            ]
        })
        .collect();
    let mut out = table(
        &[
            "Component",
            "Trained (%)",
            "Untrained (%)",
            "Delta",
            "Above margin",
        ],
        &rows,
    );
    let _ = writeln!(out, "margin {}, pass {}", pct(summary.margin), summary.pass);
    out
}

/// Human-readable rendering of a whole report file.
pub fn render_reports(reports: &[ReportRecord]) -> String {
    let mut out = String::new();
    for r in reports {
        match r {
            ReportRecord::Representation { report, .. } => {
                let _ = writeln!(out, "Tuple similarity (centered: {})", report.centered);
                out.push_str(&render_similarity(report));
            }
            ReportRecord::Embeddings { seed, report, .. } => {
                let _ = writeln!(out, "Embedding similarity, seed {seed}");
                out.push_str(&render_similarity(report));
            }
            ReportRecord::Probing {
                seed,
                embeddings,
                report,
                ..
            } => {
                let which = match embeddings {
                    EmbeddingSource::Trained => "trained",
                    EmbeddingSource::Untrained => "untrained",
                };
                let _ = writeln!(out, "Probe on {which} embeddings, seed {seed}");
                out.push_str(&render_probing(report));
            }
            ReportRecord::Differential { seed, summary, .. } => {
                let _ = writeln!(out, "Trained vs untrained probe accuracy, seed {seed}");
                out.push_str(&render_differential(summary));
            }
        }
        out.push('\n');
    }
    out
}

/// Tab-separated series, one line per plotted value, for external plotting.
///
/// Columns: `record seed series component value count`.
pub fn report_series(reports: &[ReportRecord]) -> String {
    let mut out = String::from("record\tseed\tseries\tcomponent\tvalue\tcount\n");
    for r in reports {
        match r {
            ReportRecord::Representation { report, .. } => {
                for row in &report.rows {
                    let _ = writeln!(
                        out,
                        "representation\t-\t{}\t{}\t{}\t{}",
                        row.criterion, row.component, row.mean_cosine, row.pair_count
                    );
                }
            }
            ReportRecord::Embeddings { seed, report, .. } => {
                for row in &report.rows {
                    let model = if row.trained == Some(false) {
                        "untrained"
                    } else {
                        "trained"
                    };
                    let _ = writeln!(
                        out,
                        "embeddings\t{seed}\t{}/{model}\t{}\t{}\t{}",
                        row.criterion, row.component, row.mean_cosine, row.pair_count
                    );
                }
            }
            ReportRecord::Probing {
                seed,
                embeddings,
                report,
                ..
            } => {
                let which = match embeddings {
                    EmbeddingSource::Trained => "trained",
                    EmbeddingSource::Untrained => "untrained",
                };
                for s in &report.components {
                    let _ = writeln!(
                        out,
                        "probing\t{seed}\t{}/{which}\t{}\t{}\t{}",
                        report.target, s.component, s.accuracy, s.total
                    );
                }
            }
            ReportRecord::Differential { seed, summary, .. } => {
                for d in &summary.deltas {
                    let _ = writeln!(
                        out,
                        "differential\t{seed}\t{}\t{}\t{}\t-",
                        summary.target, d.component, d.delta
                    );
                }
            }
        }
    }
    out
}
