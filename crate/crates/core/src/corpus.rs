//! One-sentence-per-line documents: loading, indexing and corpus statistics.

use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::beads::{validate_ladder, Ladder};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: file is not valid UTF-8")]
    NotUtf8 { path: String },
    #[error("blank line at line {0}")]
    BlankLine(usize),
    #[error("stray carriage return inside line {0}")]
    StrayCarriageReturn(usize),
    #[error("document contains no sentences")]
    EmptyDocument,
    #[error("gold ladder does not fit the documents: {0}")]
    LadderInvalid(String),
}

/// A single trimmed, non-empty line of a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
}

impl Sentence {
    /// Number of Unicode scalar values in the sentence.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn token_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Document {
    pub doc_id: String,
    pub language: String,
    sentences: Vec<Sentence>,
}

impl Document {
    /// Builds a document from raw lines, assigning indices in order.
    ///
    /// Blank or whitespace-only lines are rejected with their 1-based line
    /// number unless `allow_blank` is set, in which case they are skipped
    /// without consuming an index.
    pub fn from_lines<I, S>(
        doc_id: impl Into<String>,
        language: impl Into<String>,
        lines: I,
        allow_blank: bool,
    ) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut sentences = Vec::new();
        for (i, line) in lines.into_iter().enumerate() {
            let line_no = i + 1;
            let text = line.as_ref().trim();
            if text.is_empty() {
                if allow_blank {
                    log::warn!("skipping blank line {line_no}");
                    continue;
                }
                return Err(CorpusError::BlankLine(line_no));
            }
            if text.contains(['\r', '\n']) {
                return Err(CorpusError::StrayCarriageReturn(line_no));
            }
            sentences.push(Sentence {
                index: sentences.len(),
                text: text.to_string(),
            });
        }
        if sentences.is_empty() {
            return Err(CorpusError::EmptyDocument);
        }
        Ok(Document {
            doc_id: doc_id.into(),
            language: language.into(),
            sentences,
        })
    }

    /// Parses document text; LF and CRLF terminators are both accepted.
    pub fn parse(
        doc_id: impl Into<String>,
        language: impl Into<String>,
        text: &str,
        allow_blank: bool,
    ) -> Result<Self, CorpusError> {
        Self::from_lines(doc_id, language, text.lines(), allow_blank)
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Sentence> {
        self.sentences.get(index)
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::token_count).sum()
    }

    pub fn char_count(&self) -> usize {
        self.sentences.iter().map(Sentence::char_len).sum()
    }
}

/// Loads a UTF-8 document from disk. The document id is the file stem.
pub fn load_document(path: &Path, allow_blank: bool) -> Result<Document, CorpusError> {
    let display = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
        path: display.clone(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|_| CorpusError::NotUtf8 { path: display })?;
    let doc_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Document::parse(doc_id, "", &text, allow_blank)
}

/// Renders each sentence as `<index>\t<text>`.
pub fn render_indexed(doc: &Document) -> Vec<String> {
    render_indexed_range(doc, 0..doc.len())
}

/// Like [`render_indexed`] but for a sub-range, keeping the document-global
/// indices.
pub fn render_indexed_range(doc: &Document, range: std::ops::Range<usize>) -> Vec<String> {
    doc.sentences[range]
        .iter()
        .map(|s| format!("{}\t{}", s.index, s.text))
        .collect()
}

/// Rounds half away from zero to `decimals` places.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (value * scale).round() / scale
}

pub const TOKENIZER_LABEL: &str = "unicode-whitespace";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub src_sentences: usize,
    pub tgt_sentences: usize,
    pub src_tokens: usize,
    pub tgt_tokens: usize,
    pub tokenizer: &'static str,
    /// Unrounded `100 * src_sentences / tgt_sentences`.
    pub sent_ratio_pct: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub one_to_one_pct: Option<f64>,
}

pub fn sentence_ratio_pct(src_sentences: usize, tgt_sentences: usize) -> f64 {
    100.0 * src_sentences as f64 / tgt_sentences as f64
}

pub fn corpus_stats(
    src: &Document,
    tgt: &Document,
    gold: Option<&Ladder>,
) -> Result<CorpusStats, CorpusError> {
    let one_to_one_pct = match gold {
        None => None,
        Some(ladder) => {
            let report = validate_ladder(ladder, src.len(), tgt.len());
            if !report.is_gold_valid {
                return Err(CorpusError::LadderInvalid(report.summary()));
            }
            if ladder.is_empty() {
                Some(0.0)
            } else {
                let ones = ladder.beads().iter().filter(|b| b.is_one_to_one()).count();
                Some(100.0 * ones as f64 / ladder.len() as f64)
            }
        }
    };
    Ok(CorpusStats {
        src_sentences: src.len(),
        tgt_sentences: tgt.len(),
        src_tokens: src.token_count(),
        tgt_tokens: tgt.token_count(),
        tokenizer: TOKENIZER_LABEL,
        sent_ratio_pct: sentence_ratio_pct(src.len(), tgt.len()),
        one_to_one_pct,
    })
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SRC-SENT {}", self.src_sentences)?;
        writeln!(f, "SRC-TKN {}", self.src_tokens)?;
        writeln!(f, "TGT-SENT {}", self.tgt_sentences)?;
        writeln!(f, "TGT-TKN {}", self.tgt_tokens)?;
        write!(f, "SENT% {:.2}", round_half_up(self.sent_ratio_pct, 2))?;
        if let Some(pct) = self.one_to_one_pct {
            write!(f, "\n1-1 {:.2}", round_half_up(pct, 2))?;
        }
        write!(f, "\ntokenizer {}", self.tokenizer)
    }
}
