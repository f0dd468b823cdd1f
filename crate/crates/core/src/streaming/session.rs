//! Session harness: feeds audio chunks to a [`StreamingSystem`] through an
//! input buffer, collects emitted parts in an output buffer, and records
//! send, busy and emit timestamps against an injected [`Clock`].

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{BusyInterval, InputChunk, OutputChunk, ProcessingRecord, SessionHistory, StreamingError};

/// Session time in seconds.
pub trait Clock {
    fn now(&self) -> f64;
    /// Blocks (or jumps) until `t`; no-op when `t` is in the past.
    fn sleep_until(&mut self, t: f64);
}

/// Deterministic clock that jumps instead of sleeping.
#[derive(Clone, Debug, Default)]
pub struct VirtualClock {
    now: f64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> f64 {
        self.now
    }

    fn sleep_until(&mut self, t: f64) {
        if t > self.now {
            self.now = t;
        }
    }
}

#[derive(Clone, Debug)]
pub struct WallClock {
    origin: Instant,
}

impl Default for WallClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }

    fn sleep_until(&mut self, t: f64) {
        let wait = t - self.now();
        if wait > 0.0 {
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// What a system sees while processing one chunk.
pub struct SessionContext<'a> {
    clock: &'a mut dyn Clock,
    outputs: &'a mut Vec<OutputChunk>,
    recording_id: &'a str,
    seq: u64,
}

impl SessionContext<'_> {
    pub fn now(&self) -> f64 {
        self.clock.now()
    }

    /// Accounts for `seconds` of computation. On a virtual clock this is
    /// how a simulated system reports its cost.
    pub fn work(&mut self, seconds: f64) {
        let until = self.clock.now() + seconds.max(0.0);
        self.clock.sleep_until(until);
    }

    /// Pushes a part to the output buffer, stamped with the current time.
    pub fn emit(&mut self, part_id: impl Into<String>, text: impl Into<String>) {
        self.outputs.push(OutputChunk {
            recording_id: self.recording_id.to_string(),
            part_id: part_id.into(),
            text: text.into(),
            emit_time: self.clock.now(),
            chunk_seq: Some(self.seq),
        });
    }

    pub fn recording_id(&self) -> &str {
        self.recording_id
    }
}

/// A single-threaded streaming recognizer.
pub trait StreamingSystem {
    /// Processes one chunk taken from the input buffer, emitting zero or
    /// more parts through `ctx`.
    fn process(&mut self, chunk: &InputChunk, ctx: &mut SessionContext<'_>);
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pacing {
    /// Chunk `i` of a recording is sent at the sum of the durations of the
    /// chunks before it.
    #[default]
    Realtime,
    /// Every chunk is sent at session start.
    Flood,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SessionOptions {
    /// Longest a single chunk may keep the system busy.
    pub stall_timeout: f64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self { stall_timeout: 60.0 }
    }
}

/// Send times for an audio plan. Ties across recordings resolve by plan
/// order, then by sequence number.
pub(crate) fn schedule(plan: &[(String, Vec<f64>)], pacing: Pacing, origin: f64) -> Vec<InputChunk> {
    let mut chunks = Vec::new();
    for (recording_id, durations) in plan {
        let mut offset = 0.0;
        for (seq, &duration) in durations.iter().enumerate() {
            chunks.push(InputChunk {
                recording_id: recording_id.clone(),
                seq: seq as u64,
                duration,
                send_time: origin
                    + match pacing {
                        Pacing::Realtime => offset,
                        Pacing::Flood => 0.0,
                    },
            });
            offset += duration;
        }
    }
    // Stable: plan order survives equal send times.
    chunks.sort_by(|a, b| a.send_time.total_cmp(&b.send_time));
    chunks
}

/// Runs `system` over `plan` (recording id and chunk durations) and returns
/// the recorded history. Chunks are queued at their send time and processed
/// one at a time in arrival order.
pub fn run_session(
    system: &mut dyn StreamingSystem,
    plan: &[(String, Vec<f64>)],
    pacing: Pacing,
    clock: &mut dyn Clock,
    options: SessionOptions,
) -> Result<SessionHistory, StreamingError> {
    let mut pending: VecDeque<InputChunk> = schedule(plan, pacing, clock.now()).into();
    let mut buffer: VecDeque<InputChunk> = VecDeque::new();
    let mut inputs = Vec::new();
    let mut intervals = Vec::new();
    let mut outputs = Vec::new();

    loop {
        while pending.front().is_some_and(|c| c.send_time <= clock.now()) {
            // The sender never waits for the system: the scheduled time is
            // the send time even when the chunk is picked up later.
            let chunk = pending.pop_front().expect("front checked");
            inputs.push(chunk.clone());
            buffer.push_back(chunk);
        }
        if let Some(chunk) = buffer.pop_front() {
            let busy_start = clock.now();
            let mut ctx = SessionContext {
                clock: &mut *clock,
                outputs: &mut outputs,
                recording_id: &chunk.recording_id,
                seq: chunk.seq,
            };
            system.process(&chunk, &mut ctx);
            let busy_end = clock.now();
            if busy_end - busy_start > options.stall_timeout {
                return Err(StreamingError::SystemStalled {
                    recording_id: chunk.recording_id,
                    seq: chunk.seq,
                });
            }
            intervals.push(BusyInterval {
                recording_id: chunk.recording_id,
                seq: chunk.seq,
                busy_start,
                busy_end,
            });
        } else if let Some(next) = pending.front() {
            clock.sleep_until(next.send_time);
        } else {
            break;
        }
    }

    Ok(SessionHistory {
        inputs,
        processing: ProcessingRecord { intervals },
        outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streaming::mock::TranscriptMock;
    use crate::streaming::TimedWord;

    fn words() -> Vec<TimedWord> {
        ["one", "two", "three", "four"]
            .iter()
            .enumerate()
            .map(|(i, w)| TimedWord::new(*w, i as f64 * 0.5 + 0.1, i as f64 * 0.5 + 0.4))
            .collect()
    }

    fn plan(recordings: &[&str], chunks: usize) -> Vec<(String, Vec<f64>)> {
        recordings.iter().map(|r| (r.to_string(), vec![0.25; chunks])).collect()
    }

    #[test]
    fn echo_flood_one_output_per_chunk() {
        let mut system = TranscriptMock::echo(words());
        let mut clock = VirtualClock::new();
        let history = run_session(
            &mut system,
            &plan(&["r"], 8),
            Pacing::Flood,
            &mut clock,
            SessionOptions::default(),
        )
        .unwrap();
        assert_eq!(history.inputs.len(), 8);
        assert_eq!(history.outputs.len(), 8);
        assert!(history.inputs.iter().all(|c| c.send_time == 0.0));
        assert_eq!(clock.now(), 0.0);
    }

    #[test]
    fn delay_mock_realtime_emits_after_delay() {
        let delay = 0.1;
        let mut system = TranscriptMock::delay(words(), delay);
        let mut clock = VirtualClock::new();
        let history = run_session(
            &mut system,
            &plan(&["r"], 8),
            Pacing::Realtime,
            &mut clock,
            SessionOptions::default(),
        )
        .unwrap();
        for output in &history.outputs {
            let sent = history
                .inputs
                .iter()
                .find(|c| Some(c.seq) == output.chunk_seq)
                .unwrap()
                .send_time;
            assert!(output.emit_time >= sent + delay - 1e-12);
        }
        let sends: Vec<f64> = history.inputs.iter().map(|c| c.send_time).collect();
        assert_eq!(sends, (0..8).map(|i| i as f64 * 0.25).collect::<Vec<_>>());
    }

    #[test]
    fn recordings_are_labeled() {
        let mut system = TranscriptMock::echo(words());
        let mut clock = VirtualClock::new();
        let history = run_session(
            &mut system,
            &plan(&["a", "b"], 3),
            Pacing::Realtime,
            &mut clock,
            SessionOptions::default(),
        )
        .unwrap();
        let order: Vec<(&str, u64)> = history
            .inputs
            .iter()
            .map(|c| (c.recording_id.as_str(), c.seq))
            .collect();
        assert_eq!(order, [("a", 0), ("b", 0), ("a", 1), ("b", 1), ("a", 2), ("b", 2)]);
        for output in &history.outputs {
            let busy = history
                .processing
                .intervals
                .iter()
                .find(|b| Some(b.seq) == output.chunk_seq && b.recording_id == output.recording_id);
            assert!(busy.is_some());
        }
    }

    #[test]
    fn stall_is_reported() {
        let mut system = TranscriptMock::delay(words(), 5.0);
        let mut clock = VirtualClock::new();
        let result = run_session(
            &mut system,
            &plan(&["r"], 2),
            Pacing::Flood,
            &mut clock,
            SessionOptions { stall_timeout: 1.0 },
        );
        assert!(matches!(result, Err(StreamingError::SystemStalled { seq: 0, .. })));
    }

    #[test]
    fn wall_clock_realtime_is_paced() {
        let mut system = TranscriptMock::echo(words());
        let mut clock = WallClock::default();
        let plan = vec![("r".to_string(), vec![0.01; 3])];
        let history = run_session(
            &mut system,
            &plan,
            Pacing::Realtime,
            &mut clock,
            SessionOptions::default(),
        )
        .unwrap();
        assert!(clock.now() >= 0.02);
        assert_eq!(history.outputs.len(), 3);
    }
}
