use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use ladder_core::beads::{parse_ladder, render_ladder, validate_ladder, Ladder, ValidationReport};
use ladder_core::corpus::{corpus_stats, load_document, Document};
use ladder_core::eval::{compare_report, load_ladder_dir, strict_compare, strict_compare_in, EvalReport, StrictCounts};
use ladder_core::gale_church_align;
use ladder_core::llm::{align_document, backend_from_config, run_bounded, AlignError, AlignErrorKind, CompletionBackend, PromptTemplate};
use serde::{Deserialize, Serialize};

use crate::config::AppConfig;
use crate::error::CliError;
use crate::{AlignArgs, CompareArgs, EvalArgs, Method, StatsArgs, ValidateArgs};

fn load_doc(path: &Path, config: &AppConfig) -> Result<Document, CliError> {
    load_document(path, config.io.allow_blank).map_err(|source| CliError::Corpus {
        path: path.to_path_buf(),
        source,
    })
}

fn read_ladder(path: &Path) -> Result<Ladder, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let ladder = parse_ladder(&text).map_err(|source| CliError::LadderParse {
        path: path.to_path_buf(),
        source,
    })?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(ladder.with_pair_id(stem))
}

/// Writes via a temporary file in the target directory and renames it into
/// place.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(CliError::io(&dir))?;
    tmp.write_all(contents.as_bytes()).map_err(CliError::io(path))?;
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn load_template(config: &AppConfig) -> Result<PromptTemplate, CliError> {
    let template = match &config.io.template {
        None => PromptTemplate::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            serde_json::from_str(&text).map_err(|e| CliError::Template {
                path: path.clone(),
                detail: e.to_string(),
            })?
        }
    };
    template.validate().map_err(|e| CliError::Template {
        path: config.io.template.clone().unwrap_or_else(|| PathBuf::from("<bundled>")),
        detail: e.to_string(),
    })?;
    Ok(template)
}

/// Everything needed to align one pair, shared across a batch.
struct Aligner {
    method: Method,
    config: AppConfig,
    template: Option<PromptTemplate>,
    backend: Option<Box<dyn CompletionBackend>>,
}

impl Aligner {
    fn new(method: Method, config: &AppConfig) -> Result<Self, CliError> {
        let (template, backend) = match method {
            Method::Llm => {
                let template = load_template(config)?;
                let backend = backend_from_config(&config.llm).map_err(|e| AlignError {
                    pair_id: String::new(),
                    chunk: None,
                    chunks: 0,
                    kind: AlignErrorKind::Request(e),
                })?;
                (Some(template), Some(backend))
            }
            Method::GaleChurch => (None, None),
        };
        Ok(Aligner {
            method,
            config: config.clone(),
            template,
            backend,
        })
    }

    fn align(
        &self,
        pair_id: &str,
        src: &Document,
        tgt: &Document,
        chunk_workers: usize,
    ) -> Result<(Ladder, ValidationReport), CliError> {
        match self.method {
            Method::GaleChurch => {
                let mut params = self.config.baseline.params();
                if self.config.baseline.estimate_ratio {
                    params = params.with_estimated_ratio(src, tgt);
                }
                let ladder = gale_church_align(src, tgt, &params).with_pair_id(pair_id);
                let report = validate_ladder(&ladder, src.len(), tgt.len());
                Ok((ladder, report))
            }
            Method::Llm => {
                let mut options = self.config.align_options();
                options.max_concurrency = chunk_workers;
                Ok(align_document(
                    pair_id,
                    src,
                    tgt,
                    self.template.as_ref().expect("llm template"),
                    self.backend.as_deref().expect("llm backend"),
                    &self.config.llm,
                    &options,
                )?)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    pair_id: String,
    src: PathBuf,
    tgt: PathBuf,
    #[serde(default)]
    gold: Option<PathBuf>,
    out: PathBuf,
}

fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut entries: Vec<ManifestEntry> = serde_json::from_str(&text).map_err(|e| CliError::Manifest {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut seen = std::collections::HashSet::new();
    for e in &mut entries {
        if !seen.insert(e.pair_id.clone()) {
            return Err(CliError::Manifest {
                path: path.to_path_buf(),
                detail: format!("duplicate pair_id {:?}", e.pair_id),
            });
        }
        for p in [&mut e.src, &mut e.tgt, &mut e.out] {
            *p = base.join(&*p);
        }
        if let Some(g) = &mut e.gold {
            *g = base.join(&*g);
        }
    }
    if entries.is_empty() {
        return Err(CliError::Manifest {
            path: path.to_path_buf(),
            detail: "no pairs listed".into(),
        });
    }
    Ok(entries)
}

fn report_line(pair_id: &str, ladder: &Ladder, report: &ValidationReport) -> String {
    format!(
        "{pair_id}: {} beads, gold-valid {}, monotonicity violations {}, repairs {}",
        ladder.len(),
        if report.is_gold_valid { "yes" } else { "no" },
        report.monotonicity_violations,
        report.repairs.len()
    )
}

fn finish_pair(
    pair_id: &str,
    ladder: &Ladder,
    report: &ValidationReport,
    out: &Path,
) -> Result<(), CliError> {
    write_atomic(out, &render_ladder(ladder))?;
    for r in &report.repairs {
        log::info!("{pair_id}: {r}");
    }
    Ok(())
}

pub fn align(args: &AlignArgs, config: &AppConfig) -> Result<(), CliError> {
    let aligner = Aligner::new(args.method, config)?;
    if let Some(manifest) = &args.batch {
        return align_batch(manifest, args, &aligner, config);
    }
    let (src_path, tgt_path, out) = match (&args.src, &args.tgt, &args.out) {
        (Some(s), Some(t), Some(o)) => (s, t, o),
        _ => return Err(CliError::Usage("align needs SRC, TGT and --out, or --batch".into())),
    };
    let mut src = load_doc(src_path, config)?;
    let mut tgt = load_doc(tgt_path, config)?;
    let pair_id = args.pair_id.clone().unwrap_or_else(|| src.doc_id.clone());
    src.doc_id = pair_id.clone();
    tgt.doc_id = pair_id.clone();

    let (ladder, report) = aligner.align(&pair_id, &src, &tgt, config.run.max_concurrency)?;
    finish_pair(&pair_id, &ladder, &report, out)?;
    if let Some(path) = &args.report {
        write_atomic(path, &(to_json(&report) + "\n"))?;
    }
    println!("{}", report_line(&pair_id, &ladder, &report));
    println!("{report}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct BatchRecord {
    pair_id: String,
    out: PathBuf,
    report: ValidationReport,
}

fn align_batch(manifest: &Path, args: &AlignArgs, aligner: &Aligner, config: &AppConfig) -> Result<(), CliError> {
    let entries = read_manifest(manifest)?;
    let results = run_bounded(entries.len(), config.run.max_concurrency, |i| {
        let e = &entries[i];
        let mut src = load_doc(&e.src, config)?;
        let mut tgt = load_doc(&e.tgt, config)?;
        src.doc_id = e.pair_id.clone();
        tgt.doc_id = e.pair_id.clone();
        let (ladder, report) = aligner.align(&e.pair_id, &src, &tgt, 1)?;
        finish_pair(&e.pair_id, &ladder, &report, &e.out)?;
        let gold = match &e.gold {
            Some(path) => Some(strict_compare(&ladder, &read_ladder(path)?, config.eval.include_null)?),
            None => None,
        };
        Ok::<_, CliError>((ladder, report, gold))
    });

    let mut failed = Vec::new();
    let mut records = Vec::new();
    let mut scored: Vec<(String, StrictCounts)> = Vec::new();
    for (e, result) in entries.iter().zip(results) {
        match result {
            Ok((ladder, report, gold)) => {
                println!("{}", report_line(&e.pair_id, &ladder, &report));
                if let Some(counts) = gold {
                    println!("{}: {}", e.pair_id, ladder_core::prf(counts));
                    scored.push((e.pair_id.clone(), counts));
                }
                records.push(BatchRecord {
                    pair_id: e.pair_id.clone(),
                    out: e.out.clone(),
                    report,
                });
            }
            Err(err) => {
                eprintln!("error: {}: {err}", e.pair_id);
                failed.push(err.exit_code());
            }
        }
    }
    if !scored.is_empty() {
        let report = EvalReport::from_counts(args.method_name(), scored)?;
        println!("overall: {}", report.overall.metrics());
    }
    if let Some(path) = &args.report {
        write_atomic(path, &(to_json(&records) + "\n"))?;
    }
    if let Some(&code) = failed.first() {
        return Err(CliError::Batch {
            failed: failed.len(),
            total: entries.len(),
            code,
        });
    }
    Ok(())
}

impl AlignArgs {
    fn method_name(&self) -> &'static str {
        match self.method {
            Method::Llm => "llm",
            Method::GaleChurch => "gale-church",
        }
    }
}

fn print_eval(report: &EvalReport, json: bool) {
    if json {
        println!("{}", to_json(report));
        return;
    }
    if report.per_doc.len() > 1 {
        for (id, score) in &report.per_doc {
            println!(
                "{id}: {} (tp {} hyp {} ref {})",
                score.metrics(),
                score.tp,
                score.hyp,
                score.reference
            );
        }
        print!("overall: ");
    }
    let o = &report.overall;
    println!("{}", o.metrics());
    println!("tp {} hyp {} ref {}", o.tp, o.hyp, o.reference);
}

pub fn eval(args: &EvalArgs, config: &AppConfig) -> Result<(), CliError> {
    let include_null = config.eval.include_null;
    let report = match (args.gold.is_dir(), args.hyp.is_dir()) {
        (true, true) => {
            let gold = load_ladder_dir(&args.gold)?;
            let hyp = load_ladder_dir(&args.hyp)?;
            let mut cmp = compare_report(&gold, &[(args.method.clone(), hyp)], include_null)?;
            cmp.methods.pop().expect("one method")
        }
        (false, false) => {
            let gold = read_ladder(&args.gold)?;
            let hyp = read_ladder(&args.hyp)?;
            let counts = match (args.src_len, args.tgt_len) {
                (Some(s), Some(t)) => strict_compare_in(&hyp, &gold, (s, t), include_null)?,
                _ => strict_compare(&hyp, &gold, include_null)?,
            };
            EvalReport::from_counts(args.method.clone(), [(gold.pair_id.clone(), counts)])?
        }
        _ => {
            return Err(CliError::Usage(
                "GOLD and HYP must both be files or both be directories".into(),
            ))
        }
    };
    print_eval(&report, args.json);
    Ok(())
}

pub fn stats(args: &StatsArgs, config: &AppConfig) -> Result<(), CliError> {
    let src = load_doc(&args.src, config)?;
    let tgt = load_doc(&args.tgt, config)?;
    let gold = args.gold.as_deref().map(read_ladder).transpose()?;
    let stats = corpus_stats(&src, &tgt, gold.as_ref()).map_err(|source| CliError::Corpus {
        path: args.gold.clone().unwrap_or_default(),
        source,
    })?;
    if args.json {
        println!("{}", to_json(&stats));
    } else {
        println!("{stats}");
    }
    Ok(())
}

pub fn compare(args: &CompareArgs, config: &AppConfig) -> Result<(), CliError> {
    let gold = load_ladder_dir(&args.gold_dir)?;
    let mut hyps: Vec<(String, BTreeMap<String, Ladder>)> = Vec::new();
    for entry in &args.hyps {
        let (name, dir) = entry
            .split_once('=')
            .filter(|(n, d)| !n.is_empty() && !d.is_empty())
            .ok_or_else(|| CliError::Usage(format!("expected NAME=DIR, got {entry:?}")))?;
        hyps.push((name.to_string(), load_ladder_dir(Path::new(dir))?));
    }
    let cmp = compare_report(&gold, &hyps, config.eval.include_null)?;
    if args.json {
        println!("{}", to_json(&cmp));
    } else {
        print!("{}", cmp.render_table());
    }
    Ok(())
}

pub fn validate(args: &ValidateArgs, config: &AppConfig) -> Result<(), CliError> {
    let ladder = read_ladder(&args.ladder)?;
    let size = |len: Option<usize>, doc: &Option<PathBuf>| -> Result<usize, CliError> {
        match (len, doc) {
            (Some(n), _) => Ok(n),
            (None, Some(path)) => Ok(load_doc(path, config)?.len()),
            (None, None) => Err(CliError::Usage("document size missing".into())),
        }
    };
    let src_len = size(args.src_len, &args.src)?;
    let tgt_len = size(args.tgt_len, &args.tgt)?;
    let report = validate_ladder(&ladder, src_len, tgt_len);
    if args.json {
        println!("{}", to_json(&report));
    } else {
        println!("{report}");
    }
    if !report.is_gold_valid {
        return Err(CliError::NotGoldValid { src_len, tgt_len });
    }
    Ok(())
}
