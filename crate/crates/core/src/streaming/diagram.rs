//! Partial alignments over time and the prescription histogram.
//!
//! At an evaluation moment the transcript so far is aligned against the
//! reference words whose audio has been sent. A word cut by the send
//! boundary becomes optional, and the trailing run of deletions is
//! re-labeled "not yet transcribed".

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{merge_parts, InputChunk, OutputChunk, SessionHistory, StreamingError};
use crate::align::{align, flatten, Alignment, AlignmentStep, FlatView, StepKind};
use crate::annotation::{apply_mode, kept_option_indices, tokenize, Annotation, BlockOption, Segment};
use crate::metrics::{count_errors, ErrorCounts, EvalConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedWord {
    pub word: String,
    pub start: f64,
    pub end: f64,
}

impl TimedWord {
    pub fn new(word: impl Into<String>, start: f64, end: f64) -> Self {
        Self {
            word: word.into(),
            start,
            end,
        }
    }

    pub fn center(&self) -> f64 {
        (self.start + self.end) / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Correct,
    Error,
    NotYetTranscribed,
    WildcardAbsorbed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialStep {
    #[serde(flatten)]
    pub step: AlignmentStep,
    pub category: Category,
    /// Word center in audio time. Insertions, and reference tokens without
    /// a timed word, inherit the preceding word's center (or `audio_sent`).
    pub time: f64,
    pub fictitious_time: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialAlignmentRow {
    pub eval_time: f64,
    pub audio_sent: f64,
    pub hypothesis: String,
    pub steps: Vec<PartialStep>,
    pub counts: ErrorCounts,
}

impl PartialAlignmentRow {
    pub fn count(&self, category: Category) -> usize {
        self.steps.iter().filter(|s| s.category == category).count()
    }
}

/// Timing of canonical-path tokens keyed by `(segment, position)`.
struct Timing {
    words: HashMap<(usize, usize), (f64, f64)>,
    /// Center of each block's first option, when it has timed words.
    block_centers: HashMap<usize, f64>,
}

fn check_timed_words(
    annotation: &Annotation,
    timed_words: &[TimedWord],
    config: &EvalConfig,
) -> Result<Timing, StreamingError> {
    let canonical = annotation.canonical_tokens();
    if canonical.len() != timed_words.len() {
        return Err(StreamingError::TimedWordsCount {
            expected: canonical.len(),
            actual: timed_words.len(),
        });
    }
    for (index, (token, timed)) in canonical.iter().zip(timed_words).enumerate() {
        let normalized = tokenize(&timed.word, &config.tokenizer)
            .into_iter()
            .map(|t| t.text)
            .collect::<Vec<_>>()
            .join(" ");
        if normalized != token.text {
            return Err(StreamingError::TimedWordsMismatch {
                index,
                word: timed.word.clone(),
                expected: token.text.clone(),
            });
        }
        let ordered = index == 0 || timed_words[index - 1].start <= timed.start;
        // Negated so that NaN times are rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(timed.start < timed.end) || !ordered {
            return Err(StreamingError::TimedWordsOrder { index });
        }
    }

    let mut words = HashMap::new();
    let mut block_centers = HashMap::new();
    let mut next = timed_words.iter();
    for (segment_index, segment) in annotation.segments.iter().enumerate() {
        match segment {
            Segment::Plain { .. } => {
                let w = next.next().expect("counted above");
                words.insert((segment_index, 0), (w.start, w.end));
            }
            Segment::Block { options } => {
                let first = options.first().map_or(0, |o| o.tokens.len());
                let mut span: Option<(f64, f64)> = None;
                for position in 0..first {
                    let w = next.next().expect("counted above");
                    words.insert((segment_index, position), (w.start, w.end));
                    span = Some(span.map_or((w.start, w.end), |(s, _)| (s, w.end)));
                }
                if let Some((s, e)) = span {
                    block_centers.insert(segment_index, (s + e) / 2.0);
                }
            }
            Segment::Wildcard => {}
        }
    }
    Ok(Timing { words, block_centers })
}

fn make_optional(segment: &Segment) -> Segment {
    match segment {
        Segment::Plain { token } => Segment::Block {
            options: vec![BlockOption::new(vec![token.clone()], false), BlockOption::empty()],
        },
        Segment::Block { options } => {
            let mut options = options.clone();
            if !options.iter().any(BlockOption::is_empty) {
                options.push(BlockOption::empty());
            }
            Segment::Block { options }
        }
        Segment::Wildcard => Segment::Wildcard,
    }
}

/// The reference as heard by `audio_sent`: segments up to the one holding
/// the last started word. That segment becomes optional when its word is
/// still being spoken or when only part of its first option has started.
fn truncate(annotation: &Annotation, timed_words: &[TimedWord], audio_sent: f64) -> Annotation {
    let started = timed_words.iter().take_while(|w| w.start < audio_sent).count();
    let everything_heard = timed_words.last().is_none_or(|w| w.end <= audio_sent);
    if started == timed_words.len() && everything_heard {
        return annotation.clone();
    }
    if started == 0 {
        return Annotation::default();
    }

    let mut segments = Vec::new();
    let mut seen = 0;
    for segment in &annotation.segments {
        let words_here = match segment {
            Segment::Plain { .. } => 1,
            Segment::Block { options } => options.first().map_or(0, |o| o.tokens.len()),
            Segment::Wildcard => 0,
        };
        if seen + words_here < started {
            segments.push(segment.clone());
            seen += words_here;
            continue;
        }
        if words_here == 0 {
            // Only reachable when `started` was already covered.
            break;
        }
        // This segment holds the last started word.
        let last = &timed_words[started - 1];
        let partial_block = seen + words_here > started;
        let straddling = audio_sent < last.end;
        segments.push(if partial_block || straddling {
            make_optional(segment)
        } else {
            segment.clone()
        });
        break;
    }
    Annotation::from_segments(segments)
}

fn node_time(
    flat: &FlatView,
    node: usize,
    truncated: &Annotation,
    timing: &Timing,
    config: &EvalConfig,
) -> Option<f64> {
    let n = &flat.nodes[node];
    let segment = n.segment?;
    match &truncated.segments[segment] {
        Segment::Block { options } => {
            let membership = n.membership?;
            let original = kept_option_indices(options, config.mode)[membership.option];
            if original == 0 {
                timing.words.get(&(segment, n.position)).map(|(s, e)| (s + e) / 2.0)
            } else {
                timing.block_centers.get(&segment).copied()
            }
        }
        Segment::Plain { .. } => timing.words.get(&(segment, 0)).map(|(s, e)| (s + e) / 2.0),
        Segment::Wildcard => None,
    }
}

fn categorize(alignment: &Alignment) -> Vec<Category> {
    let tail_start = alignment
        .steps
        .iter()
        .rposition(|s| s.kind != StepKind::Deletion)
        .map_or(0, |i| i + 1);
    alignment
        .steps
        .iter()
        .enumerate()
        .map(|(i, step)| match step.kind {
            StepKind::Deletion if i >= tail_start => Category::NotYetTranscribed,
            StepKind::Correct => Category::Correct,
            StepKind::WildcardAbsorbed => Category::WildcardAbsorbed,
            _ => Category::Error,
        })
        .collect()
}

/// Aligns the transcript merged at `eval_time` against the reference heard
/// by `audio_sent`.
pub fn partial_alignment(
    annotation: &Annotation,
    timed_words: &[TimedWord],
    outputs: &[OutputChunk],
    eval_time: f64,
    audio_sent: f64,
    config: &EvalConfig,
) -> Result<PartialAlignmentRow, StreamingError> {
    let timing = check_timed_words(annotation, timed_words, config)?;
    let truncated = truncate(annotation, timed_words, audio_sent);
    let moded = apply_mode(&truncated, config.mode)?;
    let flat = flatten(&moded);
    let hypothesis = merge_parts(outputs, eval_time);
    let tokens = tokenize(&hypothesis, &config.tokenizer);
    let alignment = align(&flat, &tokens, &config.cost)?;
    let counts = count_errors(&alignment, config.insertion_cap);

    let categories = categorize(&alignment);
    let mut previous: Option<f64> = None;
    let steps = alignment
        .steps
        .into_iter()
        .zip(categories)
        .map(|(step, category)| {
            let own = match step.kind {
                StepKind::Insertion => None,
                _ => step
                    .ref_node_id
                    .and_then(|node| node_time(&flat, node, &truncated, &timing, config)),
            };
            if own.is_some() {
                previous = own;
            }
            let time = own.or(previous).unwrap_or(audio_sent);
            PartialStep {
                step,
                category,
                time,
                fictitious_time: own.is_none(),
            }
        })
        .collect();

    Ok(PartialAlignmentRow {
        eval_time,
        audio_sent,
        hypothesis,
        steps,
        counts,
    })
}

/// Audio seconds delivered by `t`: chunks count once sent.
pub fn audio_sent_at(inputs: &[InputChunk], t: f64) -> f64 {
    inputs.iter().filter(|c| c.send_time <= t).map(|c| c.duration).sum()
}

/// Evaluation moments `T_1..T_n`, evenly spaced up to the session end.
pub fn eval_times(history: &SessionHistory, n_rows: usize) -> Vec<f64> {
    let start = history.start_time();
    let end = history.end_time().max(start);
    (1..=n_rows)
        .map(|i| start + (end - start) * i as f64 / n_rows as f64)
        .collect()
}

/// Partial alignments at `n_rows` evenly spaced moments. `history` should
/// hold a single recording.
pub fn streaming_diagram(
    annotation: &Annotation,
    timed_words: &[TimedWord],
    history: &SessionHistory,
    n_rows: usize,
    config: &EvalConfig,
) -> Result<Vec<PartialAlignmentRow>, StreamingError> {
    if n_rows == 0 {
        return Err(StreamingError::NoRows);
    }
    eval_times(history, n_rows)
        .into_iter()
        .map(|t| {
            partial_alignment(
                annotation,
                timed_words,
                &history.outputs,
                t,
                audio_sent_at(&history.inputs, t),
                config,
            )
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub bin_width: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            bin_width: 0.25,
            min: -1.0,
            max: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinCounts {
    pub correct: u64,
    pub error: u64,
    pub not_yet: u64,
}

impl BinCounts {
    pub fn total(&self) -> u64 {
        self.correct + self.error + self.not_yet
    }

    /// `(correct, error, not_yet)` shares; zeros for an empty bin.
    pub fn fractions(&self) -> (f64, f64, f64) {
        let total = self.total();
        if total == 0 {
            return (0.0, 0.0, 0.0);
        }
        let t = total as f64;
        (self.correct as f64 / t, self.error as f64 / t, self.not_yet as f64 / t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamingHistogram {
    pub bin_edges: Vec<f64>,
    pub bins: Vec<BinCounts>,
}

impl StreamingHistogram {
    pub fn total(&self) -> u64 {
        self.bins.iter().map(BinCounts::total).sum()
    }
}

/// Bins every categorized word of every row by prescription
/// (`audio_sent - word center`). Bins are left-closed; values outside the
/// range land in the edge bins. Wildcard-absorbed words are not counted.
pub fn prescription_histogram(
    rows: &[PartialAlignmentRow],
    config: &HistogramConfig,
) -> Result<StreamingHistogram, StreamingError> {
    if rows.is_empty() {
        return Err(StreamingError::EmptyInput);
    }
    let n_bins = (((config.max - config.min) / config.bin_width).ceil() as usize).max(1);
    let bin_edges: Vec<f64> = (0..=n_bins).map(|i| config.min + i as f64 * config.bin_width).collect();
    let mut bins = vec![BinCounts::default(); n_bins];
    for row in rows {
        for step in &row.steps {
            let prescription = row.audio_sent - step.time;
            let index = ((prescription - config.min) / config.bin_width).floor();
            let index = if index.is_nan() {
                0
            } else {
                (index.max(0.0) as usize).min(n_bins - 1)
            };
            let bin = &mut bins[index];
            match step.category {
                Category::Correct => bin.correct += 1,
                Category::Error => bin.error += 1,
                Category::NotYetTranscribed => bin.not_yet += 1,
                Category::WildcardAbsorbed => {}
            }
        }
    }
    Ok(StreamingHistogram { bin_edges, bins })
}
