//! Session history and its JSONL form: one event per line, tagged
//! `input`, `busy` or `output`.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{BusyInterval, InputChunk, OutputChunk, ProcessingRecord};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionHistory {
    pub inputs: Vec<InputChunk>,
    pub processing: ProcessingRecord,
    pub outputs: Vec<OutputChunk>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HistoryEvent {
    Input(InputChunk),
    Busy(BusyInterval),
    Output(OutputChunk),
}

impl HistoryEvent {
    fn time(&self) -> f64 {
        match self {
            HistoryEvent::Input(c) => c.send_time,
            HistoryEvent::Busy(b) => b.busy_start,
            HistoryEvent::Output(o) => o.emit_time,
        }
    }
}

impl SessionHistory {
    /// Recording ids in order of first input.
    pub fn recordings(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for chunk in &self.inputs {
            if !ids.contains(&chunk.recording_id) {
                ids.push(chunk.recording_id.clone());
            }
        }
        ids
    }

    pub fn for_recording(&self, recording_id: &str) -> SessionHistory {
        SessionHistory {
            inputs: self
                .inputs
                .iter()
                .filter(|c| c.recording_id == recording_id)
                .cloned()
                .collect(),
            processing: ProcessingRecord {
                intervals: self
                    .processing
                    .intervals
                    .iter()
                    .filter(|b| b.recording_id == recording_id)
                    .cloned()
                    .collect(),
            },
            outputs: self
                .outputs
                .iter()
                .filter(|o| o.recording_id == recording_id)
                .cloned()
                .collect(),
        }
    }

    /// Latest timestamp of any event.
    pub fn end_time(&self) -> f64 {
        let sends = self.inputs.iter().map(|c| c.send_time);
        let busy = self.processing.intervals.iter().map(|b| b.busy_end);
        let emits = self.outputs.iter().map(|o| o.emit_time);
        sends.chain(busy).chain(emits).fold(0.0, f64::max)
    }

    pub fn start_time(&self) -> f64 {
        self.inputs.iter().map(|c| c.send_time).reduce(f64::min).unwrap_or(0.0)
    }

    /// Events in time order; at equal times inputs come first, then busy
    /// spans, then outputs, each in recorded order.
    pub fn events(&self) -> Vec<HistoryEvent> {
        let mut events: Vec<HistoryEvent> = self
            .inputs
            .iter()
            .cloned()
            .map(HistoryEvent::Input)
            .chain(self.processing.intervals.iter().cloned().map(HistoryEvent::Busy))
            .chain(self.outputs.iter().cloned().map(HistoryEvent::Output))
            .collect();
        let rank = |e: &HistoryEvent| match e {
            HistoryEvent::Input(_) => 0,
            HistoryEvent::Busy(_) => 1,
            HistoryEvent::Output(_) => 2,
        };
        events.sort_by(|a, b| a.time().total_cmp(&b.time()).then(rank(a).cmp(&rank(b))));
        events
    }

    pub fn from_events(events: impl IntoIterator<Item = HistoryEvent>) -> Self {
        let mut history = SessionHistory::default();
        for event in events {
            match event {
                HistoryEvent::Input(c) => history.inputs.push(c),
                HistoryEvent::Busy(b) => history.processing.intervals.push(b),
                HistoryEvent::Output(o) => history.outputs.push(o),
            }
        }
        history
    }

    pub fn write_jsonl(&self, mut writer: impl Write) -> io::Result<()> {
        for event in self.events() {
            serde_json::to_writer(&mut writer, &event)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(reader: impl BufRead) -> io::Result<Self> {
        let mut events = Vec::new();
        for (number, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event: HistoryEvent = serde_json::from_str(&line)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", number + 1)))?;
            events.push(event);
        }
        Ok(Self::from_events(events))
    }
}
