//! Mock streaming sessions with known word timings.

use mwer_core::streaming::mock::{PartStyle, TranscriptMock};
use mwer_core::streaming::TimedWord;

pub const ANNOTATION: &str = "{new york|ny} is a {big|huge} city <*> tonight {well|}";
pub const CANONICAL: &[&str] = &["new", "york", "is", "a", "big", "city", "tonight", "well"];

pub fn timed_words() -> Vec<TimedWord> {
    CANONICAL
        .iter()
        .enumerate()
        .map(|(i, w)| TimedWord::new(*w, 0.3 + 0.6 * i as f64, 0.7 + 0.6 * i as f64))
        .collect()
}

/// Chunk durations covering every word plus trailing silence.
pub fn plan(chunk: f64) -> Vec<(String, Vec<f64>)> {
    let total = timed_words().last().unwrap().end + 1.5;
    let n = (total / chunk).ceil() as usize;
    vec![("rec".to_string(), vec![chunk; n])]
}

pub struct Fixture {
    pub name: &'static str,
    pub system: TranscriptMock,
    pub chunk: f64,
}

pub fn fixtures() -> Vec<Fixture> {
    let words = timed_words();
    let mut growing = TranscriptMock::new(words.clone());
    growing.parts = PartStyle::Growing;
    growing.split_emit = true;
    growing.per_second = 0.2;
    let mut noisy = TranscriptMock::new(words.clone());
    noisy.garble_every = 3;
    noisy.jitter = 0.15;
    noisy.per_second = 0.3;
    vec![
        Fixture {
            name: "echo",
            system: TranscriptMock::echo(words.clone()),
            chunk: 0.25,
        },
        Fixture {
            name: "delay",
            system: TranscriptMock::delay(words.clone(), 0.1),
            chunk: 0.25,
        },
        Fixture {
            name: "slow",
            system: TranscriptMock::delay(words.clone(), 0.4),
            chunk: 0.25,
        },
        Fixture {
            name: "context",
            system: TranscriptMock::context(words.clone(), 1.0),
            chunk: 0.2,
        },
        Fixture {
            name: "growing",
            system: growing,
            chunk: 0.5,
        },
        Fixture {
            name: "noisy",
            system: noisy,
            chunk: 0.3,
        },
    ]
}

use mwer_core::streaming::SessionHistory;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random deterministic mock and audio plan: one to three recordings,
/// chunk durations drawn per chunk.
pub fn random_session(rng: &mut ChaCha8Rng) -> (TranscriptMock, Vec<(String, Vec<f64>)>) {
    let n_words = rng.random_range(1..12);
    let mut t = 0.0;
    let words: Vec<TimedWord> = (0..n_words)
        .map(|i| {
            t += rng.random_range(0.0..0.5);
            let start = t;
            t += rng.random_range(0.1..0.8);
            TimedWord::new(format!("w{i}"), start, t)
        })
        .collect();
    let mut system = TranscriptMock::new(words);
    system.lookahead = rng.random_range(0.0..1.0);
    system.fixed_cost = rng.random_range(0.0..0.3);
    system.per_second = rng.random_range(0.0..1.2);
    system.jitter = rng.random_range(0.0..0.2);
    system.parts = if rng.random_bool(0.5) {
        PartStyle::PerChunk
    } else {
        PartStyle::Growing
    };
    system.split_emit = rng.random_bool(0.5);
    system.garble_every = rng.random_range(0..4);
    let uniform = rng.random_bool(0.5);
    let base = rng.random_range(0.1..0.6);
    let plan = (0..rng.random_range(1..=3))
        .map(|r| {
            let n = rng.random_range(1..25);
            let durations = (0..n)
                .map(|_| if uniform { base } else { rng.random_range(0.05..0.6) })
                .collect();
            (format!("rec{r}"), durations)
        })
        .collect();
    (system, plan)
}

/// Largest timestamp difference between two histories of the same
/// session, matching events by recording, sequence and part.
pub fn max_time_difference(a: &SessionHistory, b: &SessionHistory) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    let mut diff = |x: f64, y: f64| worst = worst.max((x - y).abs());
    if a.inputs.len() != b.inputs.len()
        || a.processing.intervals.len() != b.processing.intervals.len()
        || a.outputs.len() != b.outputs.len()
    {
        return Err("event counts differ".into());
    }
    for x in &a.inputs {
        let y = b
            .inputs
            .iter()
            .find(|y| y.recording_id == x.recording_id && y.seq == x.seq)
            .ok_or("input missing")?;
        diff(x.send_time, y.send_time);
    }
    for x in &a.processing.intervals {
        let y = b
            .processing
            .intervals
            .iter()
            .find(|y| y.recording_id == x.recording_id && y.seq == x.seq)
            .ok_or("busy interval missing")?;
        diff(x.busy_start, y.busy_start);
        diff(x.busy_end, y.busy_end);
    }
    // Within one chunk, outputs keep their emission order.
    let group = |h: &SessionHistory, x: &mwer_core::streaming::OutputChunk| -> Vec<(f64, String, String)> {
        h.outputs
            .iter()
            .filter(|y| y.recording_id == x.recording_id && y.chunk_seq == x.chunk_seq)
            .map(|y| (y.emit_time, y.part_id.clone(), y.text.clone()))
            .collect()
    };
    for x in &a.outputs {
        let (ga, gb) = (group(a, x), group(b, x));
        if ga.len() != gb.len() {
            return Err(format!("outputs of chunk {:?} differ in number", x.chunk_seq));
        }
        for (p, q) in ga.iter().zip(&gb) {
            if (&p.1, &p.2) != (&q.1, &q.2) {
                return Err(format!("output differs: {p:?} vs {q:?}"));
            }
            diff(p.0, q.0);
        }
    }
    Ok(worst)
}
