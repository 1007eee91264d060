//! Alignment as translation mapping.
//!
//! Both documents are rendered with explicit line indices, the model is
//! asked which target lines translate each source line, and the index pairs
//! in its JSON reply become a ladder. Only indices are read back from the
//! model; sentence text in a reply is never used.

mod backend;
mod prompt;
mod repair;
mod response;

use std::fmt;
use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

pub use backend::{
    backend_from_config, parse_chat_content, request_alignment, BackendKind, CompletionBackend,
    CompletionRequest, HttpChatBackend, LlmConfig, MockBackend, ReplayStore, RequestError,
    MOCK_EXTENSION,
};
pub use prompt::{build_prompt, Prompt, PromptError, PromptTemplate, DEFAULT_TEMPLATE_VERSION};
pub use repair::{mappings_to_beads, mappings_to_beads_in, MappingError, RepairPolicy};
pub use response::{extract_json, ExtractError, MappingRecord, MappingResponse};

use crate::beads::{validate_ladder, Ladder, ValidationReport};
use crate::corpus::{render_indexed_range, Document};
use repair::{repair_records, Coverage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Chunk {
    pub src: Range<usize>,
    pub tgt: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChunkPlan {
    pub chunk_size_src: usize,
    pub tgt_margin: usize,
    pub chunks: Vec<Chunk>,
}

/// Splits the source side into consecutive chunks of `chunk_size_src`
/// sentences, each paired with the proportional target window widened by
/// `tgt_margin` on both ends. A chunk size of 0 means one chunk for the
/// whole document.
pub fn plan_chunks(src_len: usize, tgt_len: usize, chunk_size_src: usize, tgt_margin: usize) -> ChunkPlan {
    let whole = || Chunk {
        src: 0..src_len,
        tgt: 0..tgt_len,
    };
    let chunks = if chunk_size_src == 0 || chunk_size_src >= src_len {
        vec![whole()]
    } else {
        (0..src_len)
            .step_by(chunk_size_src)
            .map(|lo| {
                let hi = (lo + chunk_size_src).min(src_len);
                let t_lo = (lo * tgt_len / src_len).saturating_sub(tgt_margin);
                let t_hi = ((hi * tgt_len).div_ceil(src_len) + tgt_margin).min(tgt_len);
                Chunk {
                    src: lo..hi,
                    tgt: t_lo..t_hi,
                }
            })
            .collect()
    };
    ChunkPlan {
        chunk_size_src,
        tgt_margin,
        chunks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignOptions {
    pub policy: RepairPolicy,
    /// 0 aligns the whole document in one request.
    pub chunk_size_src: usize,
    pub tgt_margin: usize,
    /// Upper bound on requests in flight for one document.
    pub max_concurrency: usize,
}

impl Default for AlignOptions {
    fn default() -> Self {
        AlignOptions {
            policy: RepairPolicy::Repair,
            chunk_size_src: 0,
            tgt_margin: 0,
            max_concurrency: 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum AlignErrorKind {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("prompt needs about {estimate} tokens, over the budget of {budget}; enable chunking")]
    PromptTooLarge { estimate: usize, budget: usize },
    #[error(transparent)]
    Request(#[from] RequestError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

/// A pipeline failure, tagged with the 0-based chunk it occurred in when
/// there was more than one chunk.
#[derive(Debug, Error)]
pub struct AlignError {
    pub pair_id: String,
    pub chunk: Option<usize>,
    pub chunks: usize,
    #[source]
    pub kind: AlignErrorKind,
}

impl fmt::Display for AlignError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pair_id)?;
        if let Some(c) = self.chunk {
            write!(f, " (chunk {} of {})", c + 1, self.chunks)?;
        }
        write!(f, ": {}", self.kind)
    }
}

#[allow(clippy::too_many_arguments)]
fn align_chunk(
    pair_id: &str,
    src: &Document,
    tgt: &Document,
    chunk_id: usize,
    chunks: usize,
    chunk: &Chunk,
    template: &PromptTemplate,
    backend: &dyn CompletionBackend,
    config: &LlmConfig,
    policy: RepairPolicy,
) -> Result<(Ladder, ValidationReport), AlignErrorKind> {
    let src_lines = render_indexed_range(src, chunk.src.clone());
    let tgt_lines = render_indexed_range(tgt, chunk.tgt.clone());
    let prompt = build_prompt(&src_lines, &tgt_lines, template)?;
    if let Some(budget) = config.max_prompt_tokens_estimate {
        let estimate = prompt.estimated_tokens();
        if estimate > budget {
            return Err(AlignErrorKind::PromptTooLarge { estimate, budget });
        }
    }
    let raw = backend.complete(&CompletionRequest {
        pair_id,
        chunk: chunk_id,
        chunks,
        prompt: &prompt,
    })?;
    let response = extract_json(&raw)?;
    let chunk_tag = (chunks > 1).then_some(chunk_id);
    Ok(mappings_to_beads_in(
        &response,
        chunk.src.clone(),
        chunk.tgt.clone(),
        (src.len(), tgt.len()),
        policy,
        chunk_tag,
    )?)
}

/// Runs `job` for every index in `0..n` on at most `workers` threads and
/// returns results in index order.
pub fn run_bounded<T: Send>(n: usize, workers: usize, job: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(job).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = job(i);
                slots.lock().expect("worker panicked")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|s| s.expect("every index processed"))
        .collect()
}

/// Index, prompt, extract and repair, chunk by chunk, then merge the chunk
/// ladders. On cross-chunk coverage conflicts the earlier chunk wins.
#[allow(clippy::too_many_arguments)]
pub fn align_document(
    pair_id: &str,
    src: &Document,
    tgt: &Document,
    template: &PromptTemplate,
    backend: &dyn CompletionBackend,
    config: &LlmConfig,
    options: &AlignOptions,
) -> Result<(Ladder, ValidationReport), AlignError> {
    let plan = plan_chunks(src.len(), tgt.len(), options.chunk_size_src, options.tgt_margin);
    let chunks = plan.chunks.len();
    let fail = |chunk: Option<usize>, kind: AlignErrorKind| AlignError {
        pair_id: pair_id.to_string(),
        chunk,
        chunks,
        kind,
    };

    let results = run_bounded(chunks, options.max_concurrency, |i| {
        align_chunk(
            pair_id,
            src,
            tgt,
            i,
            chunks,
            &plan.chunks[i],
            template,
            backend,
            config,
            options.policy,
        )
    });

    let mut parts = Vec::with_capacity(chunks);
    for (i, result) in results.into_iter().enumerate() {
        parts.push(result.map_err(|kind| fail((chunks > 1).then_some(i), kind))?);
    }

    if chunks == 1 {
        let (ladder, report) = parts.pop().expect("one chunk");
        return Ok((ladder.with_pair_id(pair_id), report));
    }

    let mut coverage = Coverage::default();
    let mut repairs = Vec::new();
    let mut beads = Vec::new();
    let whole_src = 0..src.len();
    let whole_tgt = 0..tgt.len();
    for (i, (ladder, report)) in parts.into_iter().enumerate() {
        repairs.extend(report.repairs);
        let records: Vec<MappingRecord> = ladder
            .beads()
            .iter()
            .map(|b| MappingRecord {
                src: b.src().iter().map(|&x| x as i64).collect(),
                tgt: b.tgt().iter().map(|&x| x as i64).collect(),
            })
            .collect();
        let kept = repair_records(
            &records,
            &whole_src,
            &whole_tgt,
            options.policy,
            Some(i),
            &mut coverage,
            &mut repairs,
        )
        .map_err(|e| fail(Some(i), e.into()))?;
        beads.extend(kept);
    }
    if beads.is_empty() {
        return Err(fail(None, MappingError::EmptyResult.into()));
    }
    let ladder = Ladder::new(pair_id, beads);
    let mut report = validate_ladder(&ladder, src.len(), tgt.len());
    report.repairs = repairs;
    Ok((ladder, report))
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::beads::render_ladder;

    fn doc(n: usize, prefix: &str) -> Document {
        let lines: Vec<String> = (0..n).map(|i| format!("{prefix} {i}")).collect();
        Document::from_lines(prefix, "", &lines, false).unwrap()
    }

    fn window_oracle(lo: usize, hi: usize, src: usize, tgt: usize, margin: usize) -> Range<usize> {
        let a = ((lo * tgt) as f64 / src as f64).floor() as i64 - margin as i64;
        let b = ((hi * tgt) as f64 / src as f64).ceil() as i64 + margin as i64;
        (a.max(0) as usize)..(b.min(tgt as i64) as usize)
    }

    #[test]
    fn sentinel_plans_one_chunk() {
        let plan = plan_chunks(100, 200, 0, 7);
        assert_eq!(plan.chunks, vec![Chunk { src: 0..100, tgt: 0..200 }]);
    }

    #[test]
    fn proportional_windows() {
        let plan = plan_chunks(10, 20, 5, 2);
        assert_eq!(
            plan.chunks,
            vec![Chunk { src: 0..5, tgt: 0..12 }, Chunk { src: 5..10, tgt: 8..20 }]
        );
        for c in &plan.chunks {
            assert_eq!(c.tgt, window_oracle(c.src.start, c.src.end, 10, 20, 2));
        }
    }

    #[test]
    fn chunk_larger_than_document() {
        assert_eq!(plan_chunks(3, 3, 10, 0).chunks.len(), 1);
    }

    #[test]
    fn plans_partition_the_source() {
        for src in 1..30 {
            for tgt in 1..30 {
                for size in 1..8 {
                    let plan = plan_chunks(src, tgt, size, 1);
                    let mut next = 0;
                    for c in &plan.chunks {
                        assert_eq!(c.src.start, next);
                        assert!(c.src.end > c.src.start);
                        let want = window_oracle(c.src.start, c.src.end, src, tgt, 1);
                        assert!(c.tgt.start <= want.start && c.tgt.end >= want.end);
                        assert!(!c.tgt.is_empty());
                        next = c.src.end;
                    }
                    assert_eq!(next, src);
                }
            }
        }
    }

    fn mock(entries: &[(&str, &str)]) -> MockBackend {
        MockBackend::Map(
            entries
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect::<HashMap<_, _>>(),
        )
    }

    #[test]
    fn perfect_mapping_end_to_end() {
        let fixture = r#"{"alignments":[{"src":[0],"tgt":[0]},{"src":[1],"tgt":[1]},{"src":[2],"tgt":[2]}]}"#;
        let backend = mock(&[("p", fixture)]);
        let (ladder, report) = align_document(
            "p",
            &doc(3, "s"),
            &doc(3, "t"),
            &PromptTemplate::default(),
            &backend,
            &LlmConfig::default(),
            &AlignOptions::default(),
        )
        .unwrap();
        assert_eq!(render_ladder(&ladder), "0:0\n1:1\n2:2\n");
        assert_eq!(ladder.pair_id, "p");
        assert!(report.is_gold_valid && report.repairs.is_empty());
    }

    #[test]
    fn failing_chunk_is_identified() {
        let backend = mock(&[
            ("p.chunk1", r#"{"alignments":[{"src":[0],"tgt":[0]}]}"#),
            ("p.chunk2", "sorry, I can't do that"),
            ("p.chunk3", r#"{"alignments":[{"src":[2],"tgt":[2]}]}"#),
        ]);
        let options = AlignOptions {
            chunk_size_src: 1,
            ..AlignOptions::default()
        };
        let err = align_document(
            "p",
            &doc(3, "s"),
            &doc(3, "t"),
            &PromptTemplate::default(),
            &backend,
            &LlmConfig::default(),
            &options,
        )
        .unwrap_err();
        assert_eq!(err.chunk, Some(1));
        assert!(err.to_string().contains("chunk 2 of 3"), "{err}");
        assert!(matches!(err.kind, AlignErrorKind::Extract(ExtractError::JsonNotFound)));
    }

    #[test]
    fn earlier_chunk_wins_across_chunks() {
        let backend = mock(&[
            ("p.chunk1", r#"{"alignments":[{"src":[0],"tgt":[0,1]},{"src":[1],"tgt":[2]}]}"#),
            ("p.chunk2", r#"{"alignments":[{"src":[2],"tgt":[2,3]},{"src":[3],"tgt":[4]}]}"#),
        ]);
        let options = AlignOptions {
            chunk_size_src: 2,
            tgt_margin: 1,
            max_concurrency: 2,
            ..AlignOptions::default()
        };
        let (ladder, report) = align_document(
            "p",
            &doc(4, "s"),
            &doc(5, "t"),
            &PromptTemplate::default(),
            &backend,
            &LlmConfig::default(),
            &options,
        )
        .unwrap();
        assert_eq!(render_ladder(&ladder), "0:0,1\n1:2\n2:3\n3:4\n");
        assert!(report.is_gold_valid);
        assert!(report.repairs.iter().any(|r| matches!(
            r,
            crate::beads::Repair::DuplicateCoverage { chunk: Some(1), index: 2, kept_chunk: Some(0), .. }
        )));

        let strict = AlignOptions {
            policy: RepairPolicy::Strict,
            ..options
        };
        let err = align_document(
            "p",
            &doc(4, "s"),
            &doc(5, "t"),
            &PromptTemplate::default(),
            &backend,
            &LlmConfig::default(),
            &strict,
        )
        .unwrap_err();
        assert_eq!(err.chunk, Some(1));
        assert!(matches!(err.kind, AlignErrorKind::Mapping(MappingError::DuplicateCoverage { .. })));
    }

    #[test]
    fn prompt_budget_guard() {
        let backend = mock(&[("p", r#"{"alignments":[]}"#)]);
        let config = LlmConfig {
            max_prompt_tokens_estimate: Some(10),
            ..LlmConfig::default()
        };
        let err = align_document(
            "p",
            &doc(3, "s"),
            &doc(3, "t"),
            &PromptTemplate::default(),
            &backend,
            &config,
            &AlignOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err.kind, AlignErrorKind::PromptTooLarge { budget: 10, .. }));
        assert_eq!(err.chunk, None);
    }

    #[test]
    fn bounded_runner_keeps_order() {
        let out = run_bounded(50, 4, |i| i * 2);
        assert_eq!(out, (0..50).map(|i| i * 2).collect::<Vec<_>>());
        assert!(run_bounded(0, 4, |i| i).is_empty());
    }
}
