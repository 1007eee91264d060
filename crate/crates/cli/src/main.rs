//! `ladder`: align, evaluate and inspect sentence alignments.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Override;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ladder", version, about = "Sentence alignment for parallel corpora")]
struct Cli {
    /// JSON config file (default: $LADDER_CONFIG)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override a config key, e.g. --set llm.temperature=0.2
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Align a document pair (or a batch) and write a ladder file
    Align(AlignArgs),
    /// Score a hypothesis ladder against a gold ladder
    Eval(EvalArgs),
    /// Print sentence, token and 1-1 statistics for a document pair
    Stats(StatsArgs),
    /// Compare several methods against a gold directory
    Compare(CompareArgs),
    /// Check a ladder against document sizes
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Llm,
    GaleChurch,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Source document, one sentence per line
    #[arg(required_unless_present = "batch")]
    pub src: Option<PathBuf>,
    /// Target document, one sentence per line
    #[arg(required_unless_present = "batch")]
    pub tgt: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "llm")]
    pub method: Method,
    /// Output ladder file
    #[arg(short, long, required_unless_present = "batch")]
    pub out: Option<PathBuf>,
    /// Pair id used for mock fixtures and reports (default: source file stem)
    #[arg(long)]
    pub pair_id: Option<String>,
    /// JSON manifest: [{"pair_id", "src", "tgt", "gold"?, "out"}, ...]
    #[arg(long, conflicts_with_all = ["src", "tgt", "out"])]
    pub batch: Option<PathBuf>,
    /// Also write the validation report as JSON
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,

    /// http_chat, replay or mock
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub mock_dir: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub replay_dir: Option<PathBuf>,
    /// Record http_chat responses into the replay directory
    #[arg(long)]
    pub record: bool,
    /// Fail on the first invalid index instead of repairing
    #[arg(long)]
    pub strict: bool,
    /// Source sentences per request (0 = whole document)
    #[arg(long)]
    pub chunk_size: Option<usize>,
    #[arg(long)]
    pub tgt_margin: Option<usize>,
    #[arg(long)]
    pub max_concurrency: Option<usize>,
    /// Set the baseline length ratio from each pair's character counts
    #[arg(long)]
    pub estimate_ratio: bool,
    #[arg(long)]
    pub allow_blank: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Gold ladder file, or a directory of *.ladder files
    pub gold: PathBuf,
    /// Hypothesis ladder file, or a directory of *.ladder files
    pub hyp: PathBuf,
    #[arg(long)]
    pub json: bool,
    /// Count null beads
    #[arg(long)]
    pub include_null: bool,
    /// Method name for the report
    #[arg(long, default_value = "hyp")]
    pub method: String,
    /// Source document size; with --tgt-len, checks both ladders fit it
    #[arg(long, requires = "tgt_len")]
    pub src_len: Option<usize>,
    #[arg(long, requires = "src_len")]
    pub tgt_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub src: PathBuf,
    pub tgt: PathBuf,
    /// Gold ladder for the 1-1 percentage
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub allow_blank: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Directory of gold *.ladder files
    pub gold_dir: PathBuf,
    /// Hypothesis sets as NAME=DIR
    #[arg(required = true, value_name = "NAME=DIR")]
    pub hyps: Vec<String>,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub include_null: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub ladder: PathBuf,
    #[arg(long, required_unless_present = "src", conflicts_with = "src")]
    pub src_len: Option<usize>,
    #[arg(long, required_unless_present = "tgt", conflicts_with = "tgt")]
    pub tgt_len: Option<usize>,
    /// Take the source size from a document
    #[arg(long)]
    pub src: Option<PathBuf>,
    /// Take the target size from a document
    #[arg(long)]
    pub tgt: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub allow_blank: bool,
}

fn align_overrides(args: &AlignArgs) -> Vec<Override> {
    let mut out = Vec::new();
    let mut push = |path: &str, value: Option<String>| {
        if let Some(v) = value {
            out.push(Override::new(path, v));
        }
    };
    let path_str = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    push("llm.backend", args.backend.clone());
    push("llm.model_name", args.model.clone());
    push("llm.endpoint_url", args.endpoint.clone());
    push("llm.mock_dir", path_str(&args.mock_dir));
    push("llm.replay_dir", path_str(&args.replay_dir));
    push("llm.record", args.record.then(|| "true".into()));
    push("run.policy", args.strict.then(|| "strict".into()));
    push("run.chunk_size_src", args.chunk_size.map(|v| v.to_string()));
    push("run.tgt_margin", args.tgt_margin.map(|v| v.to_string()));
    push("run.max_concurrency", args.max_concurrency.map(|v| v.to_string()));
    push("baseline.estimate_ratio", args.estimate_ratio.then(|| "true".into()));
    push("io.allow_blank", args.allow_blank.then(|| "true".into()));
    out
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut overrides = cli
        .set
        .iter()
        .map(|s| Override::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    match &cli.command {
        Command::Align(args) => overrides.extend(align_overrides(args)),
        Command::Eval(args) if args.include_null => overrides.push(Override::new("eval.include_null", "true")),
        Command::Compare(args) if args.include_null => overrides.push(Override::new("eval.include_null", "true")),
        Command::Stats(args) if args.allow_blank => overrides.push(Override::new("io.allow_blank", "true")),
        Command::Validate(args) if args.allow_blank => overrides.push(Override::new("io.allow_blank", "true")),
        _ => {}
    }
    let config = config::load(cli.config.as_deref(), &overrides)?;
    config.validate()?;
    log::debug!("resolved config: {config:?}");

    match &cli.command {
        Command::Align(args) => commands::align(args, &config),
        Command::Eval(args) => commands::eval(args, &config),
        Command::Stats(args) => commands::stats(args, &config),
        Command::Compare(args) => commands::compare(args, &config),
        Command::Validate(args) => commands::validate(args, &config),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(error::exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
