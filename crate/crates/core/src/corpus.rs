//! Corpus files: JSONL, one annotated sample per line.
//!
//! ```json
//! {"v":1,"id":"utt-1","annotation":"{new york|ny} is big","hypotheses":{"sys-a":"ny is big"}}
//! ```
//!
//! `timed_words` and `session_history` are optional and only used by
//! streaming evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::streaming::history::HistoryEvent;
use crate::streaming::{SessionHistory, TimedWord};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub v: u32,
    pub id: String,
    pub annotation: String,
    /// System name to hypothesis text; ordered so output is deterministic.
    pub hypotheses: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timed_words: Option<Vec<TimedWord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_history: Option<Vec<HistoryEvent>>,
}

impl CorpusRecord {
    pub fn new(id: impl Into<String>, annotation: impl Into<String>) -> Self {
        Self {
            v: FORMAT_VERSION,
            id: id.into(),
            annotation: annotation.into(),
            hypotheses: BTreeMap::new(),
            timed_words: None,
            session_history: None,
        }
    }

    pub fn history(&self) -> Option<SessionHistory> {
        self.session_history
            .as_ref()
            .map(|events| SessionHistory::from_events(events.iter().cloned()))
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unsupported format version {version} (expected {FORMAT_VERSION})")]
    Version { line: usize, version: u32 },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn read_corpus(reader: impl BufRead) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut ids = BTreeSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_number = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Syntax {
            line: line_number,
            message: e.to_string(),
        })?;
        if record.v != FORMAT_VERSION {
            return Err(CorpusError::Version {
                line: line_number,
                version: record.v,
            });
        }
        if !ids.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_number,
                id: record.id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_corpus(records: &[CorpusRecord], mut writer: impl Write) -> io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
