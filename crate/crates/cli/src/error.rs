use std::path::PathBuf;

use ladder_core::beads::LadderParseError;
use ladder_core::corpus::CorpusError;
use ladder_core::eval::EvalError;
use ladder_core::llm::{AlignError, AlignErrorKind, MappingError, PromptError, RequestError};
use thiserror::Error;

use crate::config::ConfigError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const PIPELINE: i32 = 1;
    pub const IO_USAGE: i32 = 2;
    pub const VALIDATION: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}", corpus_message(path, source))]
    Corpus {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error("{path}: {source}")]
    LadderParse {
        path: PathBuf,
        #[source]
        source: LadderParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {detail}")]
    Manifest { path: PathBuf, detail: String },
    #[error("{path}: invalid prompt template: {detail}")]
    Template { path: PathBuf, detail: String },
    #[error("ladder is not valid for a {src_len}x{tgt_len} document pair")]
    NotGoldValid { src_len: usize, tgt_len: usize },
    #[error("{failed} of {total} pairs failed")]
    Batch { failed: usize, total: usize, code: i32 },
}

fn corpus_message(path: &std::path::Path, source: &CorpusError) -> String {
    match source {
        CorpusError::Io { .. } | CorpusError::NotUtf8 { .. } => source.to_string(),
        _ => format!("{}: {source}", path.display()),
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Usage(_) => exit::IO_USAGE,
            CliError::Manifest { .. } | CliError::Template { .. } => exit::IO_USAGE,
            CliError::Corpus { source, .. } => match source {
                CorpusError::Io { .. } | CorpusError::NotUtf8 { .. } => exit::IO_USAGE,
                _ => exit::VALIDATION,
            },
            CliError::LadderParse { .. } | CliError::NotGoldValid { .. } => exit::VALIDATION,
            CliError::Eval(e) => match e {
                EvalError::Io { .. } => exit::IO_USAGE,
                EvalError::ShapeMismatch { .. }
                | EvalError::MissingPair { .. }
                | EvalError::Parse { .. } => exit::VALIDATION,
                EvalError::EmptyInput => exit::PIPELINE,
            },
            CliError::Align(e) => match &e.kind {
                AlignErrorKind::Mapping(
                    MappingError::IndexOutOfRange { .. }
                    | MappingError::DuplicateCoverage { .. }
                    | MappingError::EmptyRecord { .. },
                ) => exit::VALIDATION,
                AlignErrorKind::Prompt(PromptError::PlaceholderMissing(_))
                | AlignErrorKind::Prompt(PromptError::PlaceholderRepeated(_))
                | AlignErrorKind::Request(
                    RequestError::MissingApiKey(_)
                    | RequestError::MissingSetting(..)
                    | RequestError::InvalidConfig(_),
                ) => exit::IO_USAGE,
                _ => exit::PIPELINE,
            },
            CliError::Batch { code, .. } => *code,
        }
    }
}
