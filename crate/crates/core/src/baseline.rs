//! Length-based dynamic-programming aligner in the Gale-Church tradition.
//!
//! Target length is modelled as normally distributed around `c` times the
//! source length with variance `s2` per source character. A bead's cost is
//! its negative log prior plus the negative log two-sided tail probability of
//! the standardized length difference. Lengths are counted in Unicode scalar
//! values, not bytes.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beads::{Bead, Ladder};
use crate::corpus::Document;

const LENGTH_EPSILON: f64 = 1e-9;
const PROBABILITY_FLOOR: f64 = 1e-300;

/// Bead shapes the aligner considers, in tie-break preference order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BeadType {
    OneOne,
    OneTwo,
    TwoOne,
    TwoTwo,
    OneZero,
    ZeroOne,
}

impl BeadType {
    pub const ALL: [BeadType; 6] = [
        BeadType::OneOne,
        BeadType::OneTwo,
        BeadType::TwoOne,
        BeadType::TwoTwo,
        BeadType::OneZero,
        BeadType::ZeroOne,
    ];

    /// Number of (source, target) sentences consumed.
    pub fn span(self) -> (usize, usize) {
        match self {
            BeadType::OneOne => (1, 1),
            BeadType::OneTwo => (1, 2),
            BeadType::TwoOne => (2, 1),
            BeadType::TwoTwo => (2, 2),
            BeadType::OneZero => (1, 0),
            BeadType::ZeroOne => (0, 1),
        }
    }
}

impl fmt::Display for BeadType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (s, t) = self.span();
        write!(f, "{s}-{t}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Priors {
    #[serde(rename = "1-1")]
    pub one_one: f64,
    #[serde(rename = "1-0")]
    pub one_zero: f64,
    #[serde(rename = "0-1")]
    pub zero_one: f64,
    #[serde(rename = "2-1")]
    pub two_one: f64,
    #[serde(rename = "1-2")]
    pub one_two: f64,
    #[serde(rename = "2-2")]
    pub two_two: f64,
}

impl Default for Priors {
    /// The classical category masses 0.89 / 0.0099 / 0.089 / 0.011, with the
    /// insertion-deletion and the merge categories each split evenly between
    /// their two directions.
    fn default() -> Self {
        Priors {
            one_one: 0.89,
            one_zero: 0.0099 / 2.0,
            zero_one: 0.0099 / 2.0,
            two_one: 0.089 / 2.0,
            one_two: 0.089 / 2.0,
            two_two: 0.011,
        }
    }
}

impl Priors {
    pub fn get(&self, bead: BeadType) -> f64 {
        match bead {
            BeadType::OneOne => self.one_one,
            BeadType::OneZero => self.one_zero,
            BeadType::ZeroOne => self.zero_one,
            BeadType::TwoOne => self.two_one,
            BeadType::OneTwo => self.one_two,
            BeadType::TwoTwo => self.two_two,
        }
    }

    pub fn sum(&self) -> f64 {
        BeadType::ALL.iter().map(|&b| self.get(b)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("length ratio c must be positive, got {0}")]
    NonPositiveRatio(f64),
    #[error("variance s2 must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("prior for {bead} must lie in (0, 1), got {value}")]
    PriorOutOfRange { bead: String, value: f64 },
    #[error("priors sum to {0}, which exceeds 1")]
    PriorsExceedOne(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaleChurchParams {
    /// Expected target characters per source character.
    pub c: f64,
    /// Variance of the length difference per source character.
    pub s2: f64,
    pub priors: Priors,
}

impl Default for GaleChurchParams {
    fn default() -> Self {
        GaleChurchParams {
            c: 1.0,
            s2: 6.8,
            priors: Priors::default(),
        }
    }
}

impl GaleChurchParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.c.is_nan() || self.c <= 0.0 {
            return Err(ParamError::NonPositiveRatio(self.c));
        }
        if self.s2.is_nan() || self.s2 <= 0.0 {
            return Err(ParamError::NonPositiveVariance(self.s2));
        }
        for bead in BeadType::ALL {
            let value = self.priors.get(bead);
            if !(value > 0.0 && value < 1.0) {
                return Err(ParamError::PriorOutOfRange {
                    bead: bead.to_string(),
                    value,
                });
            }
        }
        let sum = self.priors.sum();
        if sum > 1.0 + 1e-9 {
            return Err(ParamError::PriorsExceedOne(sum));
        }
        Ok(())
    }

    /// Returns a copy whose `c` is the document pair's total target to
    /// source character ratio.
    pub fn with_estimated_ratio(mut self, src: &Document, tgt: &Document) -> Self {
        let src_chars = src.char_count();
        if src_chars > 0 {
            self.c = tgt.char_count() as f64 / src_chars as f64;
        }
        self
    }
}

/// Standard normal upper tail `1 - Φ(x)` for `x >= 0`.
///
/// Abramowitz & Stegun 26.2.17; absolute error below 7.5e-8. Evaluated as a
/// product with the density so the tail keeps relative precision far out.
fn upper_tail(x: f64) -> f64 {
    const P: f64 = 0.231_641_9;
    const B: [f64; 5] = [
        0.319_381_530,
        -0.356_563_782,
        1.781_477_937,
        -1.821_255_978,
        1.330_274_429,
    ];
    let t = 1.0 / (1.0 + P * x);
    let poly = t * (B[0] + t * (B[1] + t * (B[2] + t * (B[3] + t * B[4]))));
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    density * poly
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 - upper_tail(x)
    } else {
        upper_tail(-x)
    }
}

/// Standardized length difference between a source and a target span.
pub fn length_delta(src_chars: usize, tgt_chars: usize, params: &GaleChurchParams) -> f64 {
    let l1 = src_chars as f64;
    let l2 = tgt_chars as f64;
    (l2 - l1 * params.c) / ((l1 + LENGTH_EPSILON) * params.s2).sqrt()
}

/// Negative log probability of a bead with the given character lengths.
pub fn match_cost(src_chars: usize, tgt_chars: usize, bead: BeadType, params: &GaleChurchParams) -> f64 {
    let delta = length_delta(src_chars, tgt_chars, params).abs();
    let tail = (2.0 * upper_tail(delta)).clamp(PROBABILITY_FLOOR, 1.0);
    -params.priors.get(bead).ln() - tail.ln()
}

/// Minimum-cost monotone segmentation into beads.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthAlignment {
    pub steps: Vec<BeadType>,
    pub cost: f64,
}

/// Cost of a bead of `bead` type starting at (`i`, `j`).
fn step_cost(
    src_lens: &[usize],
    tgt_lens: &[usize],
    i: usize,
    j: usize,
    bead: BeadType,
    params: &GaleChurchParams,
) -> f64 {
    let (ds, dt) = bead.span();
    let l1: usize = src_lens[i..i + ds].iter().sum();
    let l2: usize = tgt_lens[j..j + dt].iter().sum();
    match_cost(l1, l2, bead, params)
}

/// Total cost of a bead sequence over the given sentence lengths, or `None`
/// if the sequence does not consume both sides exactly.
pub fn sequence_cost(
    src_lens: &[usize],
    tgt_lens: &[usize],
    steps: &[BeadType],
    params: &GaleChurchParams,
) -> Option<f64> {
    let (mut i, mut j, mut cost) = (0, 0, 0.0);
    for &step in steps {
        let (ds, dt) = step.span();
        if i + ds > src_lens.len() || j + dt > tgt_lens.len() {
            return None;
        }
        cost += step_cost(src_lens, tgt_lens, i, j, step, params);
        i += ds;
        j += dt;
    }
    (i == src_lens.len() && j == tgt_lens.len()).then_some(cost)
}

/// Dynamic program over prefix pairs. Ties go to the earliest bead type in
/// [`BeadType::ALL`].
pub fn align_lengths(src_lens: &[usize], tgt_lens: &[usize], params: &GaleChurchParams) -> LengthAlignment {
    let (m, n) = (src_lens.len(), tgt_lens.len());
    let width = n + 1;
    let mut cost = vec![f64::INFINITY; (m + 1) * width];
    let mut back: Vec<Option<BeadType>> = vec![None; (m + 1) * width];
    cost[0] = 0.0;

    for i in 0..=m {
        for j in 0..=n {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut best_step = None;
            for bead in BeadType::ALL {
                let (ds, dt) = bead.span();
                if ds > i || dt > j {
                    continue;
                }
                let prev = cost[(i - ds) * width + (j - dt)];
                if !prev.is_finite() {
                    continue;
                }
                let candidate = prev + step_cost(src_lens, tgt_lens, i - ds, j - dt, bead, params);
                if candidate < best {
                    best = candidate;
                    best_step = Some(bead);
                }
            }
            cost[i * width + j] = best;
            back[i * width + j] = best_step;
        }
    }

    let mut steps = Vec::new();
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        let step = back[i * width + j].expect("every cell is reachable through 1-0 and 0-1 steps");
        steps.push(step);
        let (ds, dt) = step.span();
        i -= ds;
        j -= dt;
    }
    steps.reverse();
    LengthAlignment {
        steps,
        cost: cost[m * width + n],
    }
}

/// Converts a bead-type path into a ladder.
pub fn steps_to_ladder(pair_id: &str, steps: &[BeadType]) -> Ladder {
    let (mut i, mut j) = (0, 0);
    let beads = steps
        .iter()
        .map(|step| {
            let (ds, dt) = step.span();
            let bead = Bead::new((i..i + ds).collect(), (j..j + dt).collect())
                .expect("bead types never have two empty sides");
            i += ds;
            j += dt;
            bead
        })
        .collect();
    Ladder::new(pair_id, beads)
}

pub fn gale_church_align(src: &Document, tgt: &Document, params: &GaleChurchParams) -> Ladder {
    let src_lens: Vec<usize> = src.sentences().iter().map(|s| s.char_len()).collect();
    let tgt_lens: Vec<usize> = tgt.sentences().iter().map(|s| s.char_len()).collect();
    let alignment = align_lengths(&src_lens, &tgt_lens, params);
    steps_to_ladder(&src.doc_id, &alignment.steps)
}
