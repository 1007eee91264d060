//! Turning model records into a coverage-disjoint, in-range ladder.
//!
//! Repair rules, applied record by record in response order:
//!
//! 1. each side is sorted and deduplicated;
//! 2. indices outside the permitted range are dropped;
//! 3. indices already covered by an earlier kept record are dropped;
//! 4. a record is discarded if it listed no indices at all, or if steps 2-3
//!    emptied a side that the record had filled;
//! 5. the surviving records become beads in canonical order.
//!
//! Strict mode applies the same checks but fails on the first violation.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::response::{MappingRecord, MappingResponse};
use crate::beads::{validate_ladder, Bead, DropReason, Ladder, Repair, Side, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepairPolicy {
    Strict,
    #[default]
    Repair,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("record {record}: {side} index {index} is out of range")]
    IndexOutOfRange { record: usize, side: Side, index: i64 },
    #[error("record {record}: {side} index {index} is already covered by record {earlier}")]
    DuplicateCoverage {
        record: usize,
        side: Side,
        index: usize,
        earlier: usize,
    },
    #[error("record {record} has no indices")]
    EmptyRecord { record: usize },
    #[error("no valid alignment survived")]
    EmptyResult,
}

/// Indices claimed so far on each side, with the (chunk, record) that owns
/// them.
#[derive(Debug, Default)]
pub(crate) struct Coverage {
    src: HashMap<usize, (Option<usize>, usize)>,
    tgt: HashMap<usize, (Option<usize>, usize)>,
}

impl Coverage {
    fn side(&self, side: Side) -> &HashMap<usize, (Option<usize>, usize)> {
        match side {
            Side::Src => &self.src,
            Side::Tgt => &self.tgt,
        }
    }

    fn claim(&mut self, bead: &Bead, owner: (Option<usize>, usize)) {
        self.src.extend(bead.src().iter().map(|&i| (i, owner)));
        self.tgt.extend(bead.tgt().iter().map(|&i| (i, owner)));
    }
}

/// Applies the rule list to `records`, appending to `coverage` and
/// `repairs`. Returns the kept beads in record order.
pub(crate) fn repair_records<'a>(
    records: impl IntoIterator<Item = &'a MappingRecord>,
    src_range: &Range<usize>,
    tgt_range: &Range<usize>,
    policy: RepairPolicy,
    chunk: Option<usize>,
    coverage: &mut Coverage,
    repairs: &mut Vec<Repair>,
) -> Result<Vec<Bead>, MappingError> {
    let strict = policy == RepairPolicy::Strict;
    let mut beads = Vec::new();

    for (record, rec) in records.into_iter().enumerate() {
        if rec.src.is_empty() && rec.tgt.is_empty() {
            if strict {
                return Err(MappingError::EmptyRecord { record });
            }
            repairs.push(Repair::DroppedRecord {
                chunk,
                record,
                reason: DropReason::EmptyRecord,
            });
            continue;
        }

        let mut sides: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (slot, side, raw, range) in [
            (0, Side::Src, &rec.src, src_range),
            (1, Side::Tgt, &rec.tgt, tgt_range),
        ] {
            let mut sorted = raw.clone();
            sorted.sort_unstable();
            sorted.dedup();
            for index in sorted {
                let in_range = usize::try_from(index).ok().filter(|i| range.contains(i));
                let Some(index_u) = in_range else {
                    if strict {
                        return Err(MappingError::IndexOutOfRange { record, side, index });
                    }
                    repairs.push(Repair::OutOfRange {
                        chunk,
                        record,
                        side,
                        index,
                    });
                    continue;
                };
                if let Some(&(kept_chunk, kept_record)) = coverage.side(side).get(&index_u) {
                    if strict {
                        return Err(MappingError::DuplicateCoverage {
                            record,
                            side,
                            index: index_u,
                            earlier: kept_record,
                        });
                    }
                    repairs.push(Repair::DuplicateCoverage {
                        chunk,
                        record,
                        side,
                        index: index_u,
                        kept_chunk,
                        kept_record,
                    });
                    continue;
                }
                sides[slot].push(index_u);
            }
        }

        let [src, tgt] = sides;
        let emptied = (!rec.src.is_empty() && src.is_empty()) || (!rec.tgt.is_empty() && tgt.is_empty());
        if emptied {
            repairs.push(Repair::DroppedRecord {
                chunk,
                record,
                reason: DropReason::SideEmptied,
            });
            continue;
        }
        let bead = Bead::new(src, tgt).expect("sorted, deduplicated, non-empty");
        coverage.claim(&bead, (chunk, record));
        beads.push(bead);
    }
    Ok(beads)
}

/// Like [`mappings_to_beads`] but only indices inside the given windows are
/// accepted. The report is computed against the full document sizes.
pub fn mappings_to_beads_in(
    resp: &MappingResponse,
    src_range: Range<usize>,
    tgt_range: Range<usize>,
    shape: (usize, usize),
    policy: RepairPolicy,
    chunk: Option<usize>,
) -> Result<(Ladder, ValidationReport), MappingError> {
    let mut coverage = Coverage::default();
    let mut repairs = Vec::new();
    let beads = repair_records(
        &resp.alignments,
        &src_range,
        &tgt_range,
        policy,
        chunk,
        &mut coverage,
        &mut repairs,
    )?;
    if beads.is_empty() {
        return Err(MappingError::EmptyResult);
    }
    let ladder = Ladder::new("", beads);
    let mut report = validate_ladder(&ladder, shape.0, shape.1);
    report.repairs = repairs;
    Ok((ladder, report))
}

/// Converts a model response into a valid ladder for a `src_len` by
/// `tgt_len` document pair.
pub fn mappings_to_beads(
    resp: &MappingResponse,
    src_len: usize,
    tgt_len: usize,
    policy: RepairPolicy,
) -> Result<(Ladder, ValidationReport), MappingError> {
    mappings_to_beads_in(resp, 0..src_len, 0..tgt_len, (src_len, tgt_len), policy, None)
}
