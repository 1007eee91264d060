//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero on any unexpected outcome.
//!
//! Run with `cargo test -p ladder-cli --test acceptance`.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ladder_core::baseline::{align_lengths, match_cost, normal_cdf, sequence_cost, BeadType, GaleChurchParams};
use ladder_core::beads::{parse_ladder, render_ladder, validate_ladder, Bead, DropReason, Ladder, Repair, Side};
use ladder_core::corpus::{round_half_up, sentence_ratio_pct, Document};
use ladder_core::eval::{micro_average, prf, strict_compare_in, StrictCounts};
use ladder_core::gale_church_align;
use ladder_core::llm::{extract_json, mappings_to_beads, ExtractError, MappingError, MappingRecord, MappingResponse, RepairPolicy};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
    /// Failure analysed and accepted; a pass is reported as unexpected.
    known_failure: Option<&'static str>,
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1

fn metric_arithmetic() -> Outcome {
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;
    let m = prf(StrictCounts::new(1, 2, 3));
    ensure(
        close(m.precision, 1.0 / 2.0, 1e-9) && close(m.recall, 1.0 / 3.0, 1e-9) && close(m.f1, 2.0 / 5.0, 1e-9),
        || format!("prf(1,2,3) = {m:?}"),
    )?;
    ensure(m.to_string() == "P 0.500 R 0.333 F1 0.400", || format!("display {m}"))?;

    let avg = micro_average(&[StrictCounts::new(1, 2, 3), StrictCounts::new(2, 2, 2)]).map_err(|e| e.to_string())?;
    let (p, r) = (3.0 / 4.0, 3.0 / 5.0);
    ensure(
        close(avg.precision, p, 1e-9) && close(avg.recall, r, 1e-9) && close(avg.f1, 2.0 * p * r / (p + r), 1e-9),
        || format!("micro average = {avg:?}"),
    )?;
    ensure(close(avg.f1, 0.6667, 1e-4), || format!("micro F1 {}", avg.f1))?;
    Ok(format!("prf(1,2,3) -> {m}; micro -> {avg}"))
}

// ---------------------------------------------------------------- 2

const REFERENCE_COUNTS: [(&str, usize, usize, f64); 10] = [
    ("Easy 1", 153, 206, 74.27),
    ("Easy 2", 202, 257, 78.60),
    ("Easy 3", 161, 198, 81.31),
    ("Easy 4", 202, 233, 87.73),
    ("Easy 5", 174, 199, 87.44),
    ("Hard 1", 93, 202, 46.03),
    ("Hard 2", 100, 194, 51.55),
    ("Hard 3", 93, 175, 53.14),
    ("Hard 4", 92, 203, 45.32),
    ("Hard 5", 101, 223, 45.29),
];

fn reference_ratios() -> Outcome {
    let mut bad = Vec::new();
    for (name, src, tgt, printed) in REFERENCE_COUNTS {
        let got = sentence_ratio_pct(src, tgt);
        if (got - printed).abs() > 0.02 + 1e-9 {
            bad.push(format!("{name}: {src}/{tgt} = {:.2}, printed {printed:.2}", round_half_up(got, 2)));
        }
    }
    if bad.is_empty() {
        Ok("10/10 rows within 0.02".into())
    } else {
        Err(format!("{}/10 rows off: {}", bad.len(), bad.join("; ")))
    }
}

// ---------------------------------------------------------------- 3, 4

/// A random coverage-disjoint ladder over an `n` by `m` pair. Beads are
/// built along a monotone path, then some target sides are swapped between
/// beads to produce crossings, and some beads are dropped.
fn random_ladder(rng: &mut ChaCha8Rng, n: usize, m: usize, full: bool) -> Ladder {
    let (mut i, mut j) = (0, 0);
    let mut pairs: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    while i < n || j < m {
        let ds = rng.random_range(0..=2.min(n - i));
        let dt = rng.random_range(0..=2.min(m - j));
        if ds == 0 && dt == 0 {
            continue;
        }
        pairs.push(((i..i + ds).collect(), (j..j + dt).collect()));
        i += ds;
        j += dt;
    }
    for _ in 0..rng.random_range(0..3) {
        let a = rng.random_range(0..pairs.len());
        let b = rng.random_range(0..pairs.len());
        if a != b && !pairs[a].0.is_empty() && !pairs[b].0.is_empty() {
            let t = std::mem::take(&mut pairs[a].1);
            pairs[a].1 = std::mem::replace(&mut pairs[b].1, t);
        }
    }
    let beads = pairs
        .into_iter()
        .filter(|_| full || rng.random_bool(0.8))
        .filter_map(|(s, t)| Bead::new(s, t).ok())
        .collect();
    Ladder::new("", beads)
}

fn canonical_set(ladder: &Ladder, include_null: bool) -> BTreeSet<String> {
    ladder
        .beads()
        .iter()
        .filter(|b| include_null || (!b.src().is_empty() && !b.tgt().is_empty()))
        .map(|b| {
            let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
            format!("{}:{}", join(b.src()), join(b.tgt()))
        })
        .collect()
}

fn strict_compare_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut total_tp = 0;
    for case in 0..1000 {
        let n = rng.random_range(1..=10);
        let m = rng.random_range(1..=10);
        let reference = random_ladder(&mut rng, n, m, true);
        // half the hypotheses are perturbations of the reference
        let hyp = if rng.random_bool(0.5) {
            let full = rng.random_bool(0.5);
            random_ladder(&mut rng, n, m, full)
        } else {
            let mut beads = reference.beads().to_vec();
            beads.shuffle(&mut rng);
            beads.truncate(rng.random_range(0..=beads.len()));
            Ladder::new("", beads)
        };
        for include_null in [false, true] {
            let got = strict_compare_in(&hyp, &reference, (n, m), include_null).map_err(|e| format!("case {case}: {e}"))?;
            let h = canonical_set(&hyp, include_null);
            let r = canonical_set(&reference, include_null);
            let want = StrictCounts::new(h.intersection(&r).count(), h.len(), r.len());
            ensure(got == want, || {
                format!(
                    "case {case} include_null={include_null}: got {got:?}, oracle {want:?}\nhyp:\n{}ref:\n{}",
                    render_ladder(&hyp),
                    render_ladder(&reference)
                )
            })?;
            total_tp += got.tp;
        }
    }
    Ok(format!("1000 pairs agree ({total_tp} true positives in total)"))
}

fn ladder_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..1000 {
        let n = rng.random_range(1..=30);
        let m = rng.random_range(1..=30);
        let full = rng.random_bool(0.5);
        let ladder = random_ladder(&mut rng, n, m, full);
        let text = render_ladder(&ladder);
        let parsed = parse_ladder(&text).map_err(|e| format!("case {case}: {e}\n{text}"))?;
        ensure(parsed == ladder, || format!("case {case}: parse(render(x)) != x\n{text}"))?;
        let again = render_ladder(&parsed);
        ensure(again == text, || format!("case {case}: render not idempotent\n{text}---\n{again}"))?;
    }
    Ok("1000 ladders".into())
}

// ---------------------------------------------------------------- 5, 6

/// Every monotone bead sequence from (i, j) to the end, with its cost.
#[allow(clippy::too_many_arguments)]
fn enumerate(
    src: &[usize],
    tgt: &[usize],
    i: usize,
    j: usize,
    params: &GaleChurchParams,
    path: &mut Vec<BeadType>,
    cost: f64,
    best: &mut (f64, usize),
) {
    if i == src.len() && j == tgt.len() {
        best.1 += 1;
        if cost < best.0 {
            best.0 = cost;
        }
        return;
    }
    for bead in BeadType::ALL {
        let (ds, dt) = bead.span();
        if i + ds > src.len() || j + dt > tgt.len() {
            continue;
        }
        let l1: usize = src[i..i + ds].iter().sum();
        let l2: usize = tgt[j..j + dt].iter().sum();
        path.push(bead);
        enumerate(src, tgt, i + ds, j + dt, params, path, cost + match_cost(l1, l2, bead, params), best);
        path.pop();
    }
}

fn gale_church_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = GaleChurchParams::default();
    let mut sequences = 0usize;
    for case in 0..200 {
        let src: Vec<usize> = (0..rng.random_range(1..=6)).map(|_| rng.random_range(1..=120)).collect();
        let tgt: Vec<usize> = (0..rng.random_range(1..=6)).map(|_| rng.random_range(1..=120)).collect();
        let mut best = (f64::INFINITY, 0);
        enumerate(&src, &tgt, 0, 0, &params, &mut Vec::new(), 0.0, &mut best);
        sequences += best.1;
        let dp = align_lengths(&src, &tgt, &params);
        let tol = 1e-9 * best.0.abs().max(1.0);
        ensure((dp.cost - best.0).abs() <= tol, || {
            format!("case {case} {src:?}/{tgt:?}: dp {} vs exhaustive {}", dp.cost, best.0)
        })?;
        let attained = sequence_cost(&src, &tgt, &dp.steps, &params)
            .ok_or_else(|| format!("case {case}: returned steps do not cover both sides"))?;
        ensure((attained - best.0).abs() <= tol, || {
            format!("case {case}: returned sequence costs {attained}, optimum {}", best.0)
        })?;
    }
    Ok(format!("200 documents, {sequences} sequences enumerated"))
}

fn doc(lines: &[String]) -> Document {
    Document::from_lines("d", "", lines, false).expect("non-empty lines")
}

fn gale_church_sanity() -> Outcome {
    let params = GaleChurchParams::default();
    for n in [1usize, 5, 50] {
        let lines: Vec<String> = (0..n).map(|i| format!("sentence {i} {}", "x".repeat(i % 17))).collect();
        let d = doc(&lines);
        let ladder = gale_church_align(&d, &d, &params);
        let want: String = (0..n).map(|i| format!("{i}:{i}\n")).collect();
        ensure(render_ladder(&ladder) == want, || format!("n={n}:\n{}", render_ladder(&ladder)))?;
    }
    let src = doc(&["a".repeat(10), "b".repeat(10)]);
    let tgt = doc(&["c".repeat(20)]);
    let merged = render_ladder(&gale_church_align(&src, &tgt, &params));
    ensure(merged == "0,1:0\n", || format!("merge case gave {merged:?}"))?;
    Ok("diagonal for n = 1, 5, 50; merge case 0,1:0".into())
}

// ---------------------------------------------------------------- 7

/// Phi(x) = 1/2 + phi(x) * sum x^(2k+1) / (2k+1)!!
fn cdf_series(x: f64) -> f64 {
    let density = (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let (mut term, mut sum) = (x, x);
    let mut k = 1.0;
    while k < 10.0 + x * x || term.abs() > 1e-18 * sum.abs() {
        term *= x * x / (2.0 * k + 1.0);
        sum += term;
        k += 1.0;
    }
    0.5 + density * sum
}

fn normal_cdf_accuracy() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for step in -800..=800 {
        let x = step as f64 / 100.0;
        let err = (normal_cdf(x) - cdf_series(x)).abs();
        if err > worst.0 {
            worst = (err, x);
        }
    }
    ensure(worst.0 <= 1e-7, || format!("max error {:.3e} at x = {}", worst.0, worst.1))?;
    Ok(format!("1601 points, max error {:.2e} at x = {}", worst.0, worst.1))
}

// ---------------------------------------------------------------- 8

fn json_extraction() -> Outcome {
    let dir = fixtures().join("responses");
    let expected: HashMap<String, serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.join("expected.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    ensure(expected.len() >= 12, || format!("only {} variants", expected.len()))?;
    let mut names: Vec<&String> = expected.keys().collect();
    names.sort();
    for name in names {
        let want = &expected[name];
        let raw = std::fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let got = extract_json(&raw);
        let ok = match (want["outcome"].as_str(), &got) {
            (Some("ok"), Ok(resp)) => want["records"].as_u64() == Some(resp.alignments.len() as u64),
            (Some("schema_invalid"), Err(ExtractError::SchemaInvalid(_))) => true,
            (Some("json_not_found"), Err(ExtractError::JsonNotFound)) => true,
            _ => false,
        };
        ensure(ok, || format!("{name}: expected {want}, got {got:?}"))?;
    }
    Ok(format!("{} variants", expected.len()))
}

// ---------------------------------------------------------------- 9

fn run_batch(out_dir: &Path) -> Result<(), String> {
    let batch = fixtures().join("batch");
    let manifest: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(batch.join("manifest.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let rewritten: Vec<serde_json::Value> = manifest
        .into_iter()
        .map(|mut e| {
            for key in ["src", "tgt", "gold"] {
                if let Some(p) = e[key].as_str() {
                    e[key] = batch.join(p).display().to_string().into();
                }
            }
            let file = Path::new(e["out"].as_str().unwrap()).file_name().unwrap().to_owned();
            e["out"] = out_dir.join(file).display().to_string().into();
            e
        })
        .collect();
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string(&rewritten).unwrap()).map_err(|e| e.to_string())?;
    let output = Command::new(env!("CARGO_BIN_EXE_ladder"))
        .args(["align", "--method", "llm", "--backend", "mock", "--batch"])
        .arg(&manifest_path)
        .arg("--mock-dir")
        .arg(batch.join("mock"))
        .env_remove("LADDER_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(output.status.success(), || {
        format!("ladder exited with {}: {}", output.status, String::from_utf8_lossy(&output.stderr))
    })
}

fn end_to_end_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        run_batch(dir)?;
    }
    let expected = fixtures().join("batch/expected");
    let mut checked = 0;
    for entry in std::fs::read_dir(&expected).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap();
        let want = std::fs::read(&path).map_err(|e| e.to_string())?;
        let first = std::fs::read(a.join(name)).map_err(|e| format!("{name:?}: {e}"))?;
        let second = std::fs::read(b.join(name)).map_err(|e| format!("{name:?}: {e}"))?;
        ensure(first == second, || format!("{name:?} differs between runs"))?;
        ensure(first == want, || {
            format!("{name:?} differs from expected:\n{}", String::from_utf8_lossy(&first))
        })?;
        checked += 1;
    }
    ensure(checked == 3, || format!("expected 3 ladders, found {checked}"))?;
    Ok("3 ladders byte-identical across runs and equal to expected".into())
}

// ---------------------------------------------------------------- 10

#[derive(Debug, Clone, PartialEq, Eq)]
enum Fix {
    OutOfRange(usize, Side, i64),
    Duplicate(usize, Side, usize, usize),
    Dropped(usize, DropReason),
}

fn fix_of(r: &Repair) -> Fix {
    match *r {
        Repair::OutOfRange { record, side, index, .. } => Fix::OutOfRange(record, side, index),
        Repair::DuplicateCoverage { record, side, index, kept_record, .. } => {
            Fix::Duplicate(record, side, index, kept_record)
        }
        Repair::DroppedRecord { record, reason, .. } => Fix::Dropped(record, reason),
    }
}

/// Independent model of the repair rules: beads kept, fixes in order.
type Sides = (Vec<usize>, Vec<usize>);

fn repair_oracle(resp: &MappingResponse, n: usize, m: usize) -> (Vec<Sides>, Vec<Fix>) {
    let mut owner: [HashMap<usize, usize>; 2] = [HashMap::new(), HashMap::new()];
    let mut kept = Vec::new();
    let mut fixes = Vec::new();
    for (r, rec) in resp.alignments.iter().enumerate() {
        if rec.src.is_empty() && rec.tgt.is_empty() {
            fixes.push(Fix::Dropped(r, DropReason::EmptyRecord));
            continue;
        }
        let mut out: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (k, side, raw, len) in [(0, Side::Src, &rec.src, n), (1, Side::Tgt, &rec.tgt, m)] {
            let unique: BTreeSet<i64> = raw.iter().copied().collect();
            for idx in unique {
                if idx < 0 || idx as usize >= len {
                    fixes.push(Fix::OutOfRange(r, side, idx));
                } else if let Some(&earlier) = owner[k].get(&(idx as usize)) {
                    fixes.push(Fix::Duplicate(r, side, idx as usize, earlier));
                } else {
                    out[k].push(idx as usize);
                }
            }
        }
        if (!rec.src.is_empty() && out[0].is_empty()) || (!rec.tgt.is_empty() && out[1].is_empty()) {
            fixes.push(Fix::Dropped(r, DropReason::SideEmptied));
            continue;
        }
        for k in 0..2 {
            for &i in &out[k] {
                owner[k].insert(i, r);
            }
        }
        let [s, t] = out;
        kept.push((s, t));
    }
    (kept, fixes)
}

fn adversarial_response(rng: &mut ChaCha8Rng, n: usize, m: usize) -> MappingResponse {
    let side = |rng: &mut ChaCha8Rng, len: usize| -> Vec<i64> {
        let k = rng.random_range(0..=3);
        (0..k)
            .map(|_| match rng.random_range(0..10) {
                0 => -rng.random_range(1..=3),
                1 => (len + rng.random_range(0..3)) as i64,
                _ => rng.random_range(0..len) as i64,
            })
            .collect()
    };
    let records = rng.random_range(1..=12);
    let mut alignments: Vec<MappingRecord> = (0..records)
        .map(|_| {
            let s = side(rng, n);
            let t = side(rng, m);
            MappingRecord::new(s, t)
        })
        .collect();
    // repeat whole records now and then
    if rng.random_bool(0.3) {
        let dup = alignments[rng.random_range(0..alignments.len())].clone();
        alignments.push(dup);
    }
    MappingResponse { alignments }
}

fn repair_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut repaired, mut strict_errors) = (0usize, 0usize);
    for case in 0..500 {
        let n = rng.random_range(1..=10);
        let m = rng.random_range(1..=10);
        let resp = adversarial_response(&mut rng, n, m);
        let (kept, fixes) = repair_oracle(&resp, n, m);

        match mappings_to_beads(&resp, n, m, RepairPolicy::Repair) {
            Ok((ladder, report)) => {
                let want = Ladder::new("", kept.iter().map(|(s, t)| Bead::new(s.clone(), t.clone()).unwrap()).collect());
                ensure(ladder == want, || {
                    format!("case {case}: ladder\n{}oracle\n{}", render_ladder(&ladder), render_ladder(&want))
                })?;
                let check = validate_ladder(&ladder, n, m);
                ensure(
                    check.is_gold_valid && check.out_of_range.is_empty() && check.duplicate_coverage.is_empty(),
                    || format!("case {case}: repaired ladder does not validate: {}", check.summary()),
                )?;
                let logged: Vec<Fix> = report.repairs.iter().map(fix_of).collect();
                ensure(logged == fixes, || format!("case {case}: logged {logged:?}, oracle {fixes:?}"))?;
                repaired += logged.len();
            }
            Err(MappingError::EmptyResult) => ensure(kept.is_empty(), || format!("case {case}: unexpected empty result"))?,
            Err(e) => return Err(format!("case {case}: repair mode failed: {e}")),
        }

        let strict = mappings_to_beads(&resp, n, m, RepairPolicy::Strict);
        match (fixes.first(), strict) {
            (None, Ok((ladder, report))) => {
                ensure(report.repairs.is_empty(), || format!("case {case}: strict logged repairs"))?;
                ensure(ladder.len() == kept.len(), || format!("case {case}: strict ladder differs"))?;
            }
            (None, Err(MappingError::EmptyResult)) if kept.is_empty() => {}
            (Some(first), Err(e)) => {
                let matches = match (first, &e) {
                    (Fix::Dropped(r, DropReason::EmptyRecord), MappingError::EmptyRecord { record }) => r == record,
                    (Fix::OutOfRange(r, s, i), MappingError::IndexOutOfRange { record, side, index }) => {
                        (r, s, i) == (record, side, index)
                    }
                    (Fix::Duplicate(r, s, i, k), MappingError::DuplicateCoverage { record, side, index, earlier }) => {
                        (r, s, i, k) == (record, side, index, earlier)
                    }
                    _ => false,
                };
                ensure(matches, || format!("case {case}: first violation {first:?}, strict said {e:?}"))?;
                strict_errors += 1;
            }
            (first, got) => return Err(format!("case {case}: oracle first violation {first:?}, strict gave {got:?}")),
        }
    }
    Ok(format!("500 cases, {repaired} repairs logged, {strict_errors} strict failures at the first violation"))
}

// ----------------------------------------------------------------

fn main() {
    let criteria = [
        Criterion { id: 1, name: "metric arithmetic", limit: Duration::from_secs(1), run: metric_arithmetic, known_failure: None },
        Criterion {
            id: 2,
            name: "sentence ratio table",
            limit: Duration::from_secs(1),
            run: reference_ratios,
            known_failure: Some("the Easy 4 reference row prints 87.73 but its own counts give 202/233 = 86.70"),
        },
        Criterion { id: 3, name: "strict compare vs set oracle", limit: Duration::from_secs(10), run: strict_compare_oracle, known_failure: None },
        Criterion { id: 4, name: "ladder round trip", limit: Duration::from_secs(5), run: ladder_round_trip, known_failure: None },
        Criterion { id: 5, name: "length alignment vs enumeration", limit: Duration::from_secs(30), run: gale_church_oracle, known_failure: None },
        Criterion { id: 6, name: "length alignment sanity", limit: Duration::from_secs(1), run: gale_church_sanity, known_failure: None },
        Criterion { id: 7, name: "normal CDF accuracy", limit: Duration::from_secs(1), run: normal_cdf_accuracy, known_failure: None },
        Criterion { id: 8, name: "JSON extraction variants", limit: Duration::from_secs(1), run: json_extraction, known_failure: None },
        Criterion { id: 9, name: "end-to-end determinism", limit: Duration::from_secs(5), run: end_to_end_determinism, known_failure: None },
        Criterion { id: 10, name: "repair policy contract", limit: Duration::from_secs(5), run: repair_contract, known_failure: None },
    ];

    let (mut passed, mut failed, mut expected_failures, mut unexpected) = (0, 0, 0, 0);
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > c.limit => Err(format!("took {elapsed:.2?}, limit {:?} ({detail})", c.limit)),
            other => other,
        };
        match (&result, c.known_failure) {
            (Ok(detail), None) => {
                passed += 1;
                println!("[PASS] {:>2} {} ({elapsed:.2?}): {detail}", c.id, c.name);
            }
            (Ok(detail), Some(_)) => {
                unexpected += 1;
                println!("[PASS] {:>2} {} ({elapsed:.2?}): {detail} [listed as a known failure]", c.id, c.name);
            }
            (Err(detail), None) => {
                failed += 1;
                unexpected += 1;
                println!("[FAIL] {:>2} {} ({elapsed:.2?}): {detail}", c.id, c.name);
            }
            (Err(detail), Some(why)) => {
                failed += 1;
                expected_failures += 1;
                println!("[FAIL] {:>2} {} ({elapsed:.2?}): {detail} [known: {why}]", c.id, c.name);
            }
        }
    }
    println!(
        "\nacceptance: {passed} passed, {failed} failed ({expected_failures} known), {unexpected} unexpected"
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
