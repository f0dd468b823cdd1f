use std::io;
use std::path::PathBuf;

use mwer_core::annotation::{ModeError, ParseError};
use mwer_core::corpus::CorpusError;
use mwer_core::metrics::EvalError;
use mwer_core::streaming::StreamingError;
use thiserror::Error;

/// Exit code for malformed input: annotations, histories, flags.
pub const EXIT_INPUT: i32 = 2;
/// Exit code when the run finished but some records failed.
pub const EXIT_FAILURES: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{kind}: {source}")]
    Parse {
        kind: &'static str,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("inconsistent history: {0}")]
    Streaming(#[from] StreamingError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{failed} of {total} evaluations failed")]
    RecordFailures { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::RecordFailures { .. } | CliError::Io { .. } => EXIT_FAILURES,
            _ => EXIT_INPUT,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn json(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Json { path, source }
    }
}

impl From<ParseError> for CliError {
    fn from(source: ParseError) -> Self {
        CliError::Parse {
            kind: source.kind(),
            source,
        }
    }
}
