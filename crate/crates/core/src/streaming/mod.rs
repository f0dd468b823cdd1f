//! Streaming evaluation.
//!
//! A streaming system receives audio chunks tagged with a recording id and
//! emits text parts tagged with a recording id and a part id. Re-emitting
//! an existing part id replaces that part in place; a new part id appends.
//!
//! [`session`] drives a system and records the history, [`remap`] turns a
//! flood-paced history into the one a real-time run would have produced,
//! and [`diagram`] evaluates partial transcripts over time.

pub mod diagram;
pub mod history;
pub mod mock;
pub mod remap;
pub mod session;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diagram::{
    partial_alignment, prescription_histogram, streaming_diagram, BinCounts, Category, HistogramConfig,
    PartialAlignmentRow, PartialStep, StreamingHistogram, TimedWord,
};
pub use history::SessionHistory;
pub use remap::{remap_time, remap_with_schedule, SendSchedule};
pub use session::{
    run_session, Clock, Pacing, SessionContext, SessionOptions, StreamingSystem, VirtualClock, WallClock,
};

use crate::align::AlignError;
use crate::annotation::ModeError;
use crate::metrics::EvalError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputChunk {
    pub recording_id: String,
    pub seq: u64,
    /// Audio length in seconds.
    pub duration: f64,
    pub send_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputChunk {
    pub recording_id: String,
    pub part_id: String,
    pub text: String,
    pub emit_time: f64,
    /// Input chunk whose processing produced this output, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chunk_seq: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusyInterval {
    pub recording_id: String,
    pub seq: u64,
    pub busy_start: f64,
    pub busy_end: f64,
}

impl BusyInterval {
    pub fn duration(&self) -> f64 {
        self.busy_end - self.busy_start
    }
}

/// Busy spans of a single-threaded system, one per processed input chunk.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProcessingRecord {
    pub intervals: Vec<BusyInterval>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StreamingError {
    #[error("busy intervals of recording `{recording_id}` overlap at chunk {seq}")]
    OverlappingBusyIntervals { recording_id: String, seq: u64 },
    #[error("busy intervals of `{first}` and `{second}` overlap; remapping needs a single-threaded system")]
    MultiThreadedSessionDetected { first: String, second: String },
    #[error("chunk {seq} of `{recording_id}` has no busy interval")]
    UnprocessedChunk { recording_id: String, seq: u64 },
    #[error("chunk {seq} of `{recording_id}` was processed before it was sent")]
    ProcessedBeforeSent { recording_id: String, seq: u64 },
    #[error("system stalled on chunk {seq} of `{recording_id}`")]
    SystemStalled { recording_id: String, seq: u64 },
    #[error("timed word {index} (`{word}`) does not match reference token `{expected}`")]
    TimedWordsMismatch {
        index: usize,
        word: String,
        expected: String,
    },
    #[error("expected {expected} timed words, got {actual}")]
    TimedWordsCount { expected: usize, actual: usize },
    #[error("timed words must be ordered by start with start < end (word {index})")]
    TimedWordsOrder { index: usize },
    #[error("no partial alignments to aggregate")]
    EmptyInput,
    #[error("diagram needs at least one row")]
    NoRows,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl From<ModeError> for StreamingError {
    fn from(e: ModeError) -> Self {
        StreamingError::Eval(e.into())
    }
}

impl From<AlignError> for StreamingError {
    fn from(e: AlignError) -> Self {
        StreamingError::Eval(e.into())
    }
}

/// The transcript as of `upto`: outputs with `emit_time <= upto`, applied
/// in emission order. A known part id is replaced in place, a new one is
/// appended; parts are joined by single spaces.
pub fn merge_parts(outputs: &[OutputChunk], upto: f64) -> String {
    let mut visible: Vec<&OutputChunk> = outputs.iter().filter(|o| o.emit_time <= upto).collect();
    visible.sort_by(|a, b| a.emit_time.total_cmp(&b.emit_time));
    let mut parts: Vec<(&str, &str)> = Vec::new();
    for output in visible {
        match parts.iter_mut().find(|(id, _)| *id == output.part_id) {
            Some(part) => part.1 = &output.text,
            None => parts.push((&output.part_id, &output.text)),
        }
    }
    parts
        .iter()
        .map(|(_, text)| text.trim())
        .filter(|text| !text.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}
