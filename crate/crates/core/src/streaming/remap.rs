//! Time remapping.
//!
//! A flood-paced run sends every chunk at once, so the system never idles
//! waiting for audio. Remapping replays the recorded busy durations
//! against a real-time send schedule: chunk `i` cannot start before it is
//! sent nor before the previous chunk finishes, i.e.
//! `start'_i = max(send'_i, end'_{i-1})`, `end'_i = start'_i + busy_i`.
//! Outputs move with the busy interval they were emitted in. Only valid for
//! single-threaded systems, which is checked.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{BusyInterval, InputChunk, OutputChunk, ProcessingRecord, SessionHistory, StreamingError};

const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SendSchedule {
    /// Chunk `i` of each recording is sent at `i * interval`.
    Interval(f64),
    /// Chunk `i` is sent once the audio before it has played.
    ChunkDurations,
}

/// Remaps with a fixed send interval.
pub fn remap_time(
    inputs: &[InputChunk],
    processing: &ProcessingRecord,
    outputs: &[OutputChunk],
    chunk_interval: f64,
) -> Result<SessionHistory, StreamingError> {
    let history = SessionHistory {
        inputs: inputs.to_vec(),
        processing: processing.clone(),
        outputs: outputs.to_vec(),
    };
    remap_with_schedule(&history, SendSchedule::Interval(chunk_interval))
}

fn check_single_threaded(history: &SessionHistory) -> Result<(), StreamingError> {
    let mut intervals: Vec<&BusyInterval> = history.processing.intervals.iter().collect();
    intervals.sort_by(|a, b| a.busy_start.total_cmp(&b.busy_start));
    for pair in intervals.windows(2) {
        let (prev, next) = (pair[0], pair[1]);
        if next.busy_start < prev.busy_end - EPS {
            return Err(if prev.recording_id == next.recording_id {
                StreamingError::OverlappingBusyIntervals {
                    recording_id: next.recording_id.clone(),
                    seq: next.seq,
                }
            } else {
                StreamingError::MultiThreadedSessionDetected {
                    first: prev.recording_id.clone(),
                    second: next.recording_id.clone(),
                }
            });
        }
    }
    Ok(())
}

pub fn remap_with_schedule(history: &SessionHistory, schedule: SendSchedule) -> Result<SessionHistory, StreamingError> {
    check_single_threaded(history)?;

    let busy: HashMap<(&str, u64), &BusyInterval> = history
        .processing
        .intervals
        .iter()
        .map(|b| ((b.recording_id.as_str(), b.seq), b))
        .collect();
    for chunk in &history.inputs {
        let interval =
            busy.get(&(chunk.recording_id.as_str(), chunk.seq))
                .ok_or_else(|| StreamingError::UnprocessedChunk {
                    recording_id: chunk.recording_id.clone(),
                    seq: chunk.seq,
                })?;
        if interval.busy_start < chunk.send_time - EPS {
            return Err(StreamingError::ProcessedBeforeSent {
                recording_id: chunk.recording_id.clone(),
                seq: chunk.seq,
            });
        }
    }

    // New send times, per recording in sequence order.
    let origin = history.start_time();
    let recordings = history.recordings();
    let mut scheduled: Vec<InputChunk> = Vec::with_capacity(history.inputs.len());
    for recording in &recordings {
        let mut chunks: Vec<&InputChunk> = history.inputs.iter().filter(|c| &c.recording_id == recording).collect();
        chunks.sort_by_key(|c| c.seq);
        let mut offset = 0.0;
        for (k, chunk) in chunks.into_iter().enumerate() {
            let send_time = origin
                + match schedule {
                    SendSchedule::Interval(interval) => k as f64 * interval,
                    SendSchedule::ChunkDurations => offset,
                };
            offset += chunk.duration;
            scheduled.push(InputChunk {
                send_time,
                ..chunk.clone()
            });
        }
    }
    // Arrival order; ties keep recording order, then sequence order.
    scheduled.sort_by(|a, b| a.send_time.total_cmp(&b.send_time));

    let mut remapped: HashMap<(&str, u64), BusyInterval> = HashMap::new();
    let mut free_at = f64::NEG_INFINITY;
    for chunk in &scheduled {
        let original = busy[&(chunk.recording_id.as_str(), chunk.seq)];
        let busy_start = chunk.send_time.max(free_at);
        let busy_end = busy_start + original.duration();
        free_at = busy_end;
        remapped.insert(
            (original.recording_id.as_str(), original.seq),
            BusyInterval {
                busy_start,
                busy_end,
                ..original.clone()
            },
        );
    }
    let offset_of = |interval: &BusyInterval| {
        remapped[&(interval.recording_id.as_str(), interval.seq)].busy_start - interval.busy_start
    };

    let mut by_start: Vec<&BusyInterval> = history.processing.intervals.iter().collect();
    by_start.sort_by(|a, b| a.busy_start.total_cmp(&b.busy_start));
    let outputs = history
        .outputs
        .iter()
        .map(|output| {
            let owner = output
                .chunk_seq
                .and_then(|seq| busy.get(&(output.recording_id.as_str(), seq)).copied())
                .or_else(|| {
                    // Closed intervals; at a shared boundary the earlier
                    // interval wins.
                    by_start
                        .iter()
                        .find(|b| b.busy_start - EPS <= output.emit_time && output.emit_time <= b.busy_end + EPS)
                        .copied()
                })
                .or_else(|| {
                    by_start
                        .iter()
                        .rev()
                        .find(|b| b.busy_start <= output.emit_time)
                        .copied()
                })
                .or_else(|| by_start.first().copied());
            OutputChunk {
                emit_time: output.emit_time + owner.map_or(0.0, offset_of),
                ..output.clone()
            }
        })
        .collect();

    let inputs = history
        .inputs
        .iter()
        .map(|chunk| {
            let send_time = scheduled
                .iter()
                .find(|s| s.recording_id == chunk.recording_id && s.seq == chunk.seq)
                .expect("every input is scheduled")
                .send_time;
            InputChunk {
                send_time,
                ..chunk.clone()
            }
        })
        .collect();
    let intervals = history
        .processing
        .intervals
        .iter()
        .map(|b| remapped[&(b.recording_id.as_str(), b.seq)].clone())
        .collect();

    Ok(SessionHistory {
        inputs,
        processing: ProcessingRecord { intervals },
        outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flood(busy: &[f64]) -> SessionHistory {
        let mut t = 0.0;
        let mut history = SessionHistory::default();
        for (i, &d) in busy.iter().enumerate() {
            history.inputs.push(InputChunk {
                recording_id: "r".into(),
                seq: i as u64,
                duration: 0.25,
                send_time: 0.0,
            });
            history.processing.intervals.push(BusyInterval {
                recording_id: "r".into(),
                seq: i as u64,
                busy_start: t,
                busy_end: t + d,
            });
            t += d;
            history.outputs.push(OutputChunk {
                recording_id: "r".into(),
                part_id: i.to_string(),
                text: "w".into(),
                emit_time: t,
                chunk_seq: None,
            });
        }
        history
    }

    fn starts(history: &SessionHistory) -> Vec<f64> {
        history.processing.intervals.iter().map(|b| b.busy_start).collect()
    }

    fn assert_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-9, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn fast_system_starts_on_schedule() {
        let h = flood(&[0.1, 0.1, 0.1]);
        let r = remap_time(&h.inputs, &h.processing, &h.outputs, 0.25).unwrap();
        assert_close(&starts(&r), &[0.0, 0.25, 0.5]);
        let emits: Vec<f64> = r.outputs.iter().map(|o| o.emit_time).collect();
        assert_close(&emits, &[0.1, 0.35, 0.6]);
        let sends: Vec<f64> = r.inputs.iter().map(|c| c.send_time).collect();
        assert_close(&sends, &[0.0, 0.25, 0.5]);
    }

    #[test]
    fn zero_processing_gives_point_intervals() {
        let h = flood(&[0.0, 0.0, 0.0]);
        let r = remap_time(&h.inputs, &h.processing, &h.outputs, 0.25).unwrap();
        for (b, s) in r.processing.intervals.iter().zip([0.0, 0.25, 0.5]) {
            assert_close(&[b.busy_start, b.busy_end], &[s, s]);
        }
    }

    #[test]
    fn slow_system_queues() {
        let h = flood(&[0.3, 0.3, 0.3]);
        let r = remap_time(&h.inputs, &h.processing, &h.outputs, 0.25).unwrap();
        assert_close(&starts(&r), &[0.0, 0.3, 0.6]);
    }

    #[test]
    fn chunk_duration_schedule() {
        let mut h = flood(&[0.1, 0.1, 0.1]);
        h.inputs[1].duration = 0.5;
        let r = remap_with_schedule(&h, SendSchedule::ChunkDurations).unwrap();
        assert_close(&starts(&r), &[0.0, 0.25, 0.75]);
    }

    #[test]
    fn overlapping_intervals_rejected() {
        let mut h = flood(&[0.3, 0.3]);
        h.processing.intervals[1].busy_start = 0.1;
        assert!(matches!(
            remap_with_schedule(&h, SendSchedule::Interval(0.25)),
            Err(StreamingError::OverlappingBusyIntervals { seq: 1, .. })
        ));
        h.processing.intervals[1].recording_id = "other".into();
        h.inputs[1].recording_id = "other".into();
        assert!(matches!(
            remap_with_schedule(&h, SendSchedule::Interval(0.25)),
            Err(StreamingError::MultiThreadedSessionDetected { .. })
        ));
    }

    #[test]
    fn missing_busy_interval_rejected() {
        let mut h = flood(&[0.1, 0.1]);
        h.processing.intervals.pop();
        assert!(matches!(
            remap_with_schedule(&h, SendSchedule::Interval(0.25)),
            Err(StreamingError::UnprocessedChunk { seq: 1, .. })
        ));
    }

    #[test]
    fn remapped_intervals_are_disjoint_and_after_send() {
        let h = flood(&[0.05, 0.4, 0.01, 0.3, 0.0, 0.2]);
        let r = remap_time(&h.inputs, &h.processing, &h.outputs, 0.25).unwrap();
        for (b, c) in r.processing.intervals.iter().zip(&r.inputs) {
            assert!(b.busy_start >= c.send_time - 1e-12);
        }
        for pair in r.processing.intervals.windows(2) {
            assert!(pair[1].busy_start >= pair[0].busy_end - 1e-12);
        }
    }
}
