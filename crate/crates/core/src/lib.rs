//! Sentence alignment for parallel corpora.
//!
//! Documents are one sentence per line. Alignments are ladders: lists of
//! beads pairing source sentence indices with target sentence indices.
//!
//! - [`corpus`]: loading, indexing and statistics for documents
//! - [`beads`]: the bead and ladder model and the ladder file format
//! - [`llm`]: alignment by asking a language model to map indexed lines
//! - [`baseline`]: a deterministic length-based aligner
//! - [`eval`]: strict precision, recall and F1 with micro-averaging

pub mod baseline;
pub mod beads;
pub mod corpus;
pub mod eval;
pub mod llm;

pub use baseline::{gale_church_align, GaleChurchParams};
pub use beads::{parse_ladder, render_ladder, validate_ladder, Bead, Ladder, ValidationReport};
pub use corpus::{corpus_stats, load_document, render_indexed, CorpusStats, Document, Sentence};
pub use eval::{micro_average, prf, strict_compare, EvalReport, Metrics, StrictCounts};
pub use llm::{align_document, AlignOptions, LlmConfig, PromptTemplate, RepairPolicy};
