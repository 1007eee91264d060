//! Beads, ladders and the ladder file format.
//!
//! A ladder file holds one bead per line as `SRC:TGT`, where each side is a
//! comma-separated list of 0-based sentence indices and may be empty for a
//! null bead. Lines starting with `#` and blank lines are ignored.
//!
//! ```text
//! # pair: easy-1
//! 0:0
//! 1:1,2
//! 2,3:3
//! :4
//! ```

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BeadError {
    #[error("bead has no indices on either side")]
    BothSidesEmpty,
    #[error("{0} side is not strictly ascending")]
    NotAscending(Side),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LadderParseError {
    #[error("line {0}: malformed bead, expected `SRC:TGT` with comma-separated indices")]
    SyntaxError(usize),
    #[error("line {0}: bead has no indices on either side")]
    BothSidesEmpty(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Src,
    Tgt,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Src => "source",
            Side::Tgt => "target",
        })
    }
}

/// One alignment unit: source indices paired with target indices.
///
/// Both sides are strictly ascending. One side may be empty (a null bead),
/// never both.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bead {
    src: Vec<usize>,
    tgt: Vec<usize>,
}

fn strictly_ascending(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl Bead {
    pub fn new(src: Vec<usize>, tgt: Vec<usize>) -> Result<Self, BeadError> {
        if src.is_empty() && tgt.is_empty() {
            return Err(BeadError::BothSidesEmpty);
        }
        if !strictly_ascending(&src) {
            return Err(BeadError::NotAscending(Side::Src));
        }
        if !strictly_ascending(&tgt) {
            return Err(BeadError::NotAscending(Side::Tgt));
        }
        Ok(Bead { src, tgt })
    }

    /// Sorts and deduplicates both sides before constructing.
    pub fn normalized(mut src: Vec<usize>, mut tgt: Vec<usize>) -> Result<Self, BeadError> {
        src.sort_unstable();
        src.dedup();
        tgt.sort_unstable();
        tgt.dedup();
        Self::new(src, tgt)
    }

    pub fn src(&self) -> &[usize] {
        &self.src
    }

    pub fn tgt(&self) -> &[usize] {
        &self.tgt
    }

    pub fn side(&self, side: Side) -> &[usize] {
        match side {
            Side::Src => &self.src,
            Side::Tgt => &self.tgt,
        }
    }

    pub fn is_null(&self) -> bool {
        self.src.is_empty() || self.tgt.is_empty()
    }

    pub fn is_one_to_one(&self) -> bool {
        self.src.len() == 1 && self.tgt.len() == 1
    }

    fn sort_key(&self) -> (usize, bool) {
        match self.src.first() {
            Some(&s) => (s, false),
            None => (self.tgt[0], true),
        }
    }
}

/// Canonical order: by smallest source index, or smallest target index for
/// source-null beads; source-bearing beads first on a tie, then the full
/// index lists.
impl Ord for Bead {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then_with(|| self.src.cmp(&other.src))
            .then_with(|| self.tgt.cmp(&other.tgt))
    }
}

impl PartialOrd for Bead {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn write_side(f: &mut fmt::Formatter<'_>, side: &[usize]) -> fmt::Result {
    for (i, idx) in side.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{idx}")?;
    }
    Ok(())
}

impl fmt::Display for Bead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_side(f, &self.src)?;
        f.write_str(":")?;
        write_side(f, &self.tgt)
    }
}

/// The beads of one document pair, kept in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ladder {
    pub pair_id: String,
    beads: Vec<Bead>,
}

impl Ladder {
    pub fn new(pair_id: impl Into<String>, mut beads: Vec<Bead>) -> Self {
        beads.sort();
        Ladder {
            pair_id: pair_id.into(),
            beads,
        }
    }

    pub fn with_pair_id(mut self, pair_id: impl Into<String>) -> Self {
        self.pair_id = pair_id.into();
        self
    }

    pub fn beads(&self) -> &[Bead] {
        &self.beads
    }

    pub fn into_beads(self) -> Vec<Bead> {
        self.beads
    }

    pub fn len(&self) -> usize {
        self.beads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beads.is_empty()
    }

    /// One past the largest index referenced on each side.
    pub fn extent(&self) -> (usize, usize) {
        let max_of = |side: Side| {
            self.beads
                .iter()
                .filter_map(|b| b.side(side).last())
                .max()
                .map_or(0, |m| m + 1)
        };
        (max_of(Side::Src), max_of(Side::Tgt))
    }
}

fn parse_side(text: &str) -> Option<Vec<usize>> {
    let text = text.trim();
    if text.is_empty() {
        return Some(Vec::new());
    }
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
                None
            } else {
                tok.parse().ok()
            }
        })
        .collect()
}

/// Parses ladder text. Indices within a side are sorted and deduplicated;
/// beads are returned in canonical order with an empty `pair_id`.
pub fn parse_ladder(text: &str) -> Result<Ladder, LadderParseError> {
    let mut beads = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (src, tgt) = line
            .split_once(':')
            .ok_or(LadderParseError::SyntaxError(line_no))?;
        let src = parse_side(src).ok_or(LadderParseError::SyntaxError(line_no))?;
        let tgt = parse_side(tgt).ok_or(LadderParseError::SyntaxError(line_no))?;
        if src.is_empty() && tgt.is_empty() {
            return Err(LadderParseError::BothSidesEmpty(line_no));
        }
        if !strictly_ascending(&src) || !strictly_ascending(&tgt) {
            log::warn!("line {line_no}: bead indices reordered or deduplicated");
        }
        beads.push(Bead::normalized(src, tgt).expect("non-empty bead"));
    }
    Ok(Ladder::new("", beads))
}

/// Renders in canonical order, one bead per line, LF-terminated.
pub fn render_ladder(ladder: &Ladder) -> String {
    let mut beads: Vec<&Bead> = ladder.beads.iter().collect();
    beads.sort();
    let mut out = String::new();
    for bead in beads {
        out.push_str(&bead.to_string());
        out.push('\n');
    }
    out
}

/// A change made while turning a model response into a valid ladder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Repair {
    /// An index outside the permitted range was removed.
    OutOfRange {
        chunk: Option<usize>,
        record: usize,
        side: Side,
        index: i64,
    },
    /// An index already covered by an earlier record was removed.
    DuplicateCoverage {
        chunk: Option<usize>,
        record: usize,
        side: Side,
        index: usize,
        kept_chunk: Option<usize>,
        kept_record: usize,
    },
    /// A record was discarded.
    DroppedRecord {
        chunk: Option<usize>,
        record: usize,
        reason: DropReason,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// The record listed no indices at all.
    EmptyRecord,
    /// Repairs emptied a side the response had filled.
    SideEmptied,
}

impl fmt::Display for Repair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc = |chunk: &Option<usize>, record: &usize| match chunk {
            Some(c) => format!("chunk {} record {}", c + 1, record),
            None => format!("record {record}"),
        };
        match self {
            Repair::OutOfRange {
                chunk,
                record,
                side,
                index,
            } => write!(f, "{}: dropped out-of-range {side} index {index}", loc(chunk, record)),
            Repair::DuplicateCoverage {
                chunk,
                record,
                side,
                index,
                kept_chunk,
                kept_record,
            } => write!(
                f,
                "{}: dropped {side} index {index} already covered by {}",
                loc(chunk, record),
                loc(kept_chunk, kept_record)
            ),
            Repair::DroppedRecord {
                chunk,
                record,
                reason,
            } => write!(
                f,
                "{}: record dropped ({})",
                loc(chunk, record),
                match reason {
                    DropReason::EmptyRecord => "no indices",
                    DropReason::SideEmptied => "a side became empty",
                }
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutOfRange {
    pub bead: usize,
    pub side: Side,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DuplicateCoverage {
    pub side: Side,
    pub index: usize,
    pub beads: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub out_of_range: Vec<OutOfRange>,
    pub duplicate_coverage: Vec<DuplicateCoverage>,
    pub monotonicity_violations: usize,
    pub is_gold_valid: bool,
    /// Repairs applied before this ladder was produced, if it came from a
    /// model response.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub repairs: Vec<Repair>,
}

impl ValidationReport {
    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        for o in &self.out_of_range {
            parts.push(format!("bead {}: {} index {} out of range", o.bead, o.side, o.index));
        }
        for d in &self.duplicate_coverage {
            parts.push(format!(
                "{} index {} covered by beads {:?}",
                d.side, d.index, d.beads
            ));
        }
        if parts.is_empty() {
            "ok".to_string()
        } else {
            parts.join("; ")
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "gold-valid: {}",
            if self.is_gold_valid { "yes" } else { "no" }
        )?;
        writeln!(f, "out-of-range indices: {}", self.out_of_range.len())?;
        writeln!(f, "duplicate coverage: {}", self.duplicate_coverage.len())?;
        writeln!(f, "monotonicity violations: {}", self.monotonicity_violations)?;
        write!(f, "repairs: {}", self.repairs.len())?;
        for o in &self.out_of_range {
            write!(f, "\n  bead {}: {} index {} out of range", o.bead, o.side, o.index)?;
        }
        for d in &self.duplicate_coverage {
            write!(f, "\n  {} index {} in beads {:?}", d.side, d.index, d.beads)?;
        }
        for r in &self.repairs {
            write!(f, "\n  {r}")?;
        }
        Ok(())
    }
}

/// Checks index ranges and coverage disjointness, and counts monotonicity
/// violations between adjacent two-sided beads. Bead positions refer to the
/// ladder's canonical order.
pub fn validate_ladder(ladder: &Ladder, src_len: usize, tgt_len: usize) -> ValidationReport {
    let mut out_of_range = Vec::new();
    let mut seen: [BTreeMap<usize, Vec<usize>>; 2] = [BTreeMap::new(), BTreeMap::new()];

    for (pos, bead) in ladder.beads.iter().enumerate() {
        for (slot, side, len) in [(0, Side::Src, src_len), (1, Side::Tgt, tgt_len)] {
            for &index in bead.side(side) {
                if index >= len {
                    out_of_range.push(OutOfRange {
                        bead: pos,
                        side,
                        index,
                    });
                }
                seen[slot].entry(index).or_default().push(pos);
            }
        }
    }

    let mut duplicate_coverage = Vec::new();
    for (slot, side) in [(0, Side::Src), (1, Side::Tgt)] {
        for (&index, beads) in &seen[slot] {
            if beads.len() > 1 {
                duplicate_coverage.push(DuplicateCoverage {
                    side,
                    index,
                    beads: beads.clone(),
                });
            }
        }
    }

    let is_gold_valid = out_of_range.is_empty() && duplicate_coverage.is_empty();
    ValidationReport {
        out_of_range,
        duplicate_coverage,
        monotonicity_violations: count_monotonicity_violations(ladder),
        is_gold_valid,
        repairs: Vec::new(),
    }
}

fn count_monotonicity_violations(ladder: &Ladder) -> usize {
    let two_sided: Vec<&Bead> = ladder.beads.iter().filter(|b| !b.is_null()).collect();
    two_sided
        .windows(2)
        .filter(|w| w[1].tgt[0] < *w[0].tgt.last().unwrap())
        .count()
}
