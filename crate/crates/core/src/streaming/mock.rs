//! Scripted systems for exercising the harness without a model.

use std::collections::BTreeMap;

use super::session::{SessionContext, StreamingSystem};
use super::{InputChunk, TimedWord};

/// How emitted words are grouped into parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartStyle {
    /// One new part per input chunk, holding the words released by it.
    PerChunk,
    /// A single part re-emitted with the full transcript so far.
    Growing,
}

#[derive(Clone, Debug, Default)]
struct RecordingState {
    received: f64,
    released: usize,
}

/// Transcribes a known word list: a word is released once the audio
/// received so far reaches its end plus `lookahead`. Processing a chunk
/// costs `fixed_cost + per_second * duration` seconds, plus a jitter term
/// that is a pure function of the chunk.
#[derive(Clone, Debug)]
pub struct TranscriptMock {
    pub words: Vec<TimedWord>,
    pub lookahead: f64,
    pub fixed_cost: f64,
    pub per_second: f64,
    /// Amplitude of the deterministic per-chunk jitter.
    pub jitter: f64,
    pub parts: PartStyle,
    /// Emit half the released words halfway through processing.
    pub split_emit: bool,
    /// Misrecognize every n-th released word (0 = never).
    pub garble_every: usize,
    state: BTreeMap<String, RecordingState>,
}

impl TranscriptMock {
    pub fn new(words: Vec<TimedWord>) -> Self {
        Self {
            words,
            lookahead: 0.0,
            fixed_cost: 0.0,
            per_second: 0.0,
            jitter: 0.0,
            parts: PartStyle::PerChunk,
            split_emit: false,
            garble_every: 0,
            state: BTreeMap::new(),
        }
    }

    /// Zero processing time; one output per chunk.
    pub fn echo(words: Vec<TimedWord>) -> Self {
        Self::new(words)
    }

    /// Every chunk keeps the system busy for `delay` seconds.
    pub fn delay(words: Vec<TimedWord>, delay: f64) -> Self {
        Self {
            fixed_cost: delay,
            ..Self::new(words)
        }
    }

    /// Holds each word back until `context` seconds of audio follow it.
    pub fn context(words: Vec<TimedWord>, context: f64) -> Self {
        Self {
            lookahead: context,
            ..Self::new(words)
        }
    }

    pub fn cost(&self, chunk: &InputChunk) -> f64 {
        let mut hash = chunk.seq.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
        for byte in chunk.recording_id.bytes() {
            hash = (hash ^ u64::from(byte)).wrapping_mul(0x1000_0000_01B3);
        }
        let unit = (hash >> 11) as f64 / (1u64 << 53) as f64;
        self.fixed_cost + self.per_second * chunk.duration + self.jitter * unit
    }

    fn text(&self, from: usize, to: usize) -> String {
        (from..to)
            .map(|i| {
                let word = &self.words[i].word;
                if self.garble_every > 0 && (i + 1) % self.garble_every == 0 {
                    format!("{word}x")
                } else {
                    word.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl StreamingSystem for TranscriptMock {
    fn process(&mut self, chunk: &InputChunk, ctx: &mut SessionContext<'_>) {
        let cost = self.cost(chunk);
        let state = self.state.entry(chunk.recording_id.clone()).or_default();
        state.received += chunk.duration;
        let before = state.released;
        let received = state.received;
        let after = before
            + self.words[before..]
                .iter()
                .take_while(|w| w.end + self.lookahead <= received + 1e-9)
                .count();
        state.released = after;

        let part = |seq: u64, half: bool| match self.parts {
            PartStyle::PerChunk if half => format!("{seq}a"),
            PartStyle::PerChunk => seq.to_string(),
            PartStyle::Growing => "0".to_string(),
        };
        let start = match self.parts {
            PartStyle::PerChunk => before,
            PartStyle::Growing => 0,
        };

        if self.split_emit && after > before {
            let middle = before + (after - before) / 2;
            ctx.work(cost / 2.0);
            ctx.emit(part(chunk.seq, true), self.text(start, middle));
            ctx.work(cost / 2.0);
            let from = match self.parts {
                PartStyle::PerChunk => middle,
                PartStyle::Growing => 0,
            };
            ctx.emit(part(chunk.seq, false), self.text(from, after));
        } else {
            ctx.work(cost);
            ctx.emit(part(chunk.seq, false), self.text(start, after));
        }
    }
}
