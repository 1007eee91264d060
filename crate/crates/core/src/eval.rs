//! Strict alignment evaluation.
//!
//! A hypothesis bead counts as a true positive only when both of its index
//! sets equal those of some reference bead. Overall scores are
//! micro-averaged: counts are summed across documents before computing
//! precision and recall.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::beads::{parse_ladder, validate_ladder, Bead, Ladder, LadderParseError};
use crate::corpus::round_half_up;

/// File extension of ladder files inside gold and hypothesis directories.
pub const LADDER_EXTENSION: &str = "ladder";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{which} ladder does not fit a {src_len}x{tgt_len} document pair: {detail}")]
    ShapeMismatch {
        which: &'static str,
        src_len: usize,
        tgt_len: usize,
        detail: String,
    },
    #[error("no documents to average")]
    EmptyInput,
    #[error("method {method:?} has no ladder for pair {pair_id:?}")]
    MissingPair { pair_id: String, method: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: LadderParseError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct StrictCounts {
    pub tp: usize,
    pub hyp: usize,
    #[serde(rename = "ref")]
    pub reference: usize,
}

impl StrictCounts {
    pub fn new(tp: usize, hyp: usize, reference: usize) -> Self {
        StrictCounts { tp, hyp, reference }
    }
}

impl std::ops::Add for StrictCounts {
    type Output = StrictCounts;

    fn add(self, rhs: Self) -> Self {
        StrictCounts {
            tp: self.tp + rhs.tp,
            hyp: self.hyp + rhs.hyp,
            reference: self.reference + rhs.reference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    #[serde(rename = "p")]
    pub precision: f64,
    #[serde(rename = "r")]
    pub recall: f64,
    pub f1: f64,
}

impl std::fmt::Display for Metrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "P {:.3} R {:.3} F1 {:.3}",
            round_half_up(self.precision, 3),
            round_half_up(self.recall, 3),
            round_half_up(self.f1, 3)
        )
    }
}

/// Compares two ladders of the same document pair whose sizes are known.
pub fn strict_compare_in(
    hyp: &Ladder,
    reference: &Ladder,
    shape: (usize, usize),
    include_null: bool,
) -> Result<StrictCounts, EvalError> {
    let (src_len, tgt_len) = shape;
    for (which, ladder) in [("hypothesis", hyp), ("reference", reference)] {
        let report = validate_ladder(ladder, src_len, tgt_len);
        if !report.is_gold_valid {
            return Err(EvalError::ShapeMismatch {
                which,
                src_len,
                tgt_len,
                detail: report.summary(),
            });
        }
    }
    Ok(count_matches(hyp, reference, include_null))
}

/// Compares a hypothesis against a reference whose extent defines the
/// document pair's size.
pub fn strict_compare(hyp: &Ladder, reference: &Ladder, include_null: bool) -> Result<StrictCounts, EvalError> {
    strict_compare_in(hyp, reference, reference.extent(), include_null)
}

fn count_matches(hyp: &Ladder, reference: &Ladder, include_null: bool) -> StrictCounts {
    let keep = |b: &&Bead| include_null || !b.is_null();
    let ref_set: HashSet<&Bead> = reference.beads().iter().filter(keep).collect();
    let hyp_beads: Vec<&Bead> = hyp.beads().iter().filter(keep).collect();
    let tp = hyp_beads.iter().filter(|b| ref_set.contains(*b)).count();
    StrictCounts {
        tp,
        hyp: hyp_beads.len(),
        reference: ref_set.len(),
    }
}

pub fn prf(counts: StrictCounts) -> Metrics {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(counts.tp, counts.hyp);
    let recall = ratio(counts.tp, counts.reference);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics {
        precision,
        recall,
        f1,
    }
}

pub fn micro_average(per_doc: &[StrictCounts]) -> Result<Metrics, EvalError> {
    if per_doc.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(prf(per_doc.iter().copied().fold(StrictCounts::default(), |a, b| a + b)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocScore {
    pub tp: usize,
    pub hyp: usize,
    #[serde(rename = "ref")]
    pub reference: usize,
    pub p: f64,
    pub r: f64,
    pub f1: f64,
}

impl DocScore {
    fn new(counts: StrictCounts) -> Self {
        let m = prf(counts);
        DocScore {
            tp: counts.tp,
            hyp: counts.hyp,
            reference: counts.reference,
            p: m.precision,
            r: m.recall,
            f1: m.f1,
        }
    }

    pub fn counts(&self) -> StrictCounts {
        StrictCounts::new(self.tp, self.hyp, self.reference)
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            precision: self.p,
            recall: self.r,
            f1: self.f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub method: String,
    pub per_doc: BTreeMap<String, DocScore>,
    pub overall: DocScore,
}

impl EvalReport {
    /// Builds a report from per-document counts, micro-averaging the overall
    /// row.
    pub fn from_counts(
        method: impl Into<String>,
        per_doc: impl IntoIterator<Item = (String, StrictCounts)>,
    ) -> Result<Self, EvalError> {
        let per_doc: BTreeMap<String, DocScore> = per_doc
            .into_iter()
            .map(|(id, counts)| (id, DocScore::new(counts)))
            .collect();
        let counts: Vec<StrictCounts> = per_doc.values().map(DocScore::counts).collect();
        micro_average(&counts)?;
        let total = counts.into_iter().fold(StrictCounts::default(), |a, b| a + b);
        Ok(EvalReport {
            method: method.into(),
            per_doc,
            overall: DocScore::new(total),
        })
    }
}

/// Reads every `*.ladder` file in `dir`, keyed by file stem.
pub fn load_ladder_dir(dir: &Path) -> Result<BTreeMap<String, Ladder>, EvalError> {
    let io_err = |source| EvalError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(LADDER_EXTENSION) {
            continue;
        }
        let Some(stem) = path.file_stem().map(|s| s.to_string_lossy().into_owned()) else {
            continue;
        };
        let text = std::fs::read_to_string(&path).map_err(|source| EvalError::Io {
            path: path.clone(),
            source,
        })?;
        let ladder = parse_ladder(&text).map_err(|source| EvalError::Parse {
            path: path.clone(),
            source,
        })?;
        out.insert(stem.clone(), ladder.with_pair_id(stem));
    }
    Ok(out)
}

/// Side-by-side evaluation of several methods against one gold set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub methods: Vec<EvalReport>,
}

/// Scores every named hypothesis set against `gold`. Every set must cover
/// every gold pair.
pub fn compare_report(
    gold: &BTreeMap<String, Ladder>,
    hyps: &[(String, BTreeMap<String, Ladder>)],
    include_null: bool,
) -> Result<Comparison, EvalError> {
    let mut methods = Vec::with_capacity(hyps.len());
    for (method, ladders) in hyps {
        let mut per_doc = Vec::with_capacity(gold.len());
        for (pair_id, reference) in gold {
            let hyp = ladders.get(pair_id).ok_or_else(|| EvalError::MissingPair {
                pair_id: pair_id.clone(),
                method: method.clone(),
            })?;
            per_doc.push((pair_id.clone(), strict_compare(hyp, reference, include_null)?));
        }
        methods.push(EvalReport::from_counts(method.clone(), per_doc)?);
    }
    Ok(Comparison { methods })
}

fn cell(value: f64, best: f64) -> String {
    let shown = round_half_up(value, 3);
    if shown == best {
        format!("**{shown:.3}**")
    } else {
        format!("{shown:.3}")
    }
}

impl Comparison {
    /// Markdown table with one P/R/F1 block per document and an overall
    /// block. The best value in each row is wrapped in `**`.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "| Dataset | Metric |");
        for m in &self.methods {
            let _ = write!(out, " {} |", m.method);
        }
        out.push('\n');
        out.push_str("|---|---|");
        for _ in &self.methods {
            out.push_str("---:|");
        }
        out.push('\n');

        let pair_ids: Vec<&String> = self
            .methods
            .first()
            .map(|m| m.per_doc.keys().collect())
            .unwrap_or_default();
        let mut blocks: Vec<(&str, Vec<&DocScore>)> = pair_ids
            .iter()
            .map(|id| (id.as_str(), self.methods.iter().map(|m| &m.per_doc[*id]).collect()))
            .collect();
        blocks.push(("Overall", self.methods.iter().map(|m| &m.overall).collect()));

        for (label, scores) in blocks {
            let rows: [(&str, Vec<f64>); 3] = [
                ("P", scores.iter().map(|s| s.p).collect()),
                ("R", scores.iter().map(|s| s.r).collect()),
                ("F1", scores.iter().map(|s| s.f1).collect()),
            ];
            for (i, (metric, values)) in rows.iter().enumerate() {
                let best = values
                    .iter()
                    .map(|v| round_half_up(*v, 3))
                    .fold(f64::NEG_INFINITY, f64::max);
                let _ = write!(out, "| {} | {} |", if i == 0 { label } else { "" }, metric);
                for v in values {
                    let _ = write!(out, " {} |", cell(*v, best));
                }
                out.push('\n');
            }
        }
        out
    }
}
