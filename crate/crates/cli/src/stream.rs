//! `mwer stream-eval` and `mwer simulate`.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;
use std::str::FromStr;

use mwer_core::annotation::parse_annotation;
use mwer_core::metrics::EvalConfig;
use mwer_core::streaming::mock::TranscriptMock;
use mwer_core::streaming::{
    prescription_histogram, remap_with_schedule, run_session, streaming_diagram, HistogramConfig, Pacing,
    PartialAlignmentRow, SendSchedule, SessionHistory, SessionOptions, StreamingHistogram, TimedWord, VirtualClock,
};

use crate::error::CliError;
use crate::svg;

pub const DIAGRAM_FILE: &str = "diagram.json";
pub const HISTOGRAM_FILE: &str = "histogram.json";
pub const DIAGRAM_SVG: &str = "diagram.svg";
pub const HISTOGRAM_SVG: &str = "histogram.svg";
pub const REMAPPED_FILE: &str = "history.remapped.jsonl";

#[derive(Clone, Debug)]
pub struct StreamOptions {
    pub config: EvalConfig,
    pub annotation: String,
    /// Replay a flood-paced history on this send schedule first.
    pub remap: Option<SendSchedule>,
    /// Needed when the history holds several recordings.
    pub recording: Option<String>,
    pub rows: usize,
    pub histogram: HistogramConfig,
}

impl Default for StreamOptions {
    fn default() -> Self {
        Self {
            config: EvalConfig::default(),
            annotation: String::new(),
            remap: None,
            recording: None,
            rows: 20,
            histogram: HistogramConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StreamOutcome {
    pub recording_id: String,
    /// The (possibly remapped) history of the evaluated recording.
    pub history: SessionHistory,
    pub rows: Vec<PartialAlignmentRow>,
    pub histogram: StreamingHistogram,
}

pub fn read_history(path: &Path) -> Result<SessionHistory, CliError> {
    let file = File::open(path).map_err(CliError::io(path))?;
    SessionHistory::read_jsonl(BufReader::new(file)).map_err(CliError::io(path))
}

pub fn read_timed_words(path: &Path) -> Result<Vec<TimedWord>, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(CliError::json(path))
}

fn select_recording(history: &SessionHistory, wanted: Option<&str>) -> Result<String, CliError> {
    let recordings = history.recordings();
    match wanted {
        Some(id) if recordings.iter().any(|r| r == id) => Ok(id.to_string()),
        Some(id) => Err(CliError::Usage(format!("recording {id:?} is not in the history"))),
        None => match recordings.as_slice() {
            [only] => Ok(only.clone()),
            [] => Err(CliError::Usage("history has no input chunks".into())),
            _ => Err(CliError::Usage(format!(
                "history holds {} recordings; pick one with --recording",
                recordings.len()
            ))),
        },
    }
}

/// Diagram rows and histogram for one recording of `history`.
pub fn stream_eval(
    history: &SessionHistory,
    timed_words: &[TimedWord],
    options: &StreamOptions,
) -> Result<StreamOutcome, CliError> {
    let annotation = parse_annotation(&options.annotation, &options.config.tokenizer)?;
    // Remapping replays the whole session: other recordings share the
    // single worker, so they are kept until after the replay.
    let history = match options.remap {
        Some(schedule) => remap_with_schedule(history, schedule)?,
        None => history.clone(),
    };
    let recording_id = select_recording(&history, options.recording.as_deref())?;
    let history = history.for_recording(&recording_id);
    let rows = streaming_diagram(&annotation, timed_words, &history, options.rows, &options.config)?;
    let histogram = prescription_histogram(&rows, &options.histogram)?;
    Ok(StreamOutcome {
        recording_id,
        history,
        rows,
        histogram,
    })
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::json(path))?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

/// Reads the inputs, evaluates, and writes JSON and SVG artifacts to `out`.
pub fn cmd_stream_eval(
    history: &Path,
    timed_words: &Path,
    out: &Path,
    options: &StreamOptions,
) -> Result<StreamOutcome, CliError> {
    let history = read_history(history)?;
    let words = read_timed_words(timed_words)?;
    let outcome = stream_eval(&history, &words, options)?;

    fs::create_dir_all(out).map_err(CliError::io(out))?;
    write_json(&out.join(DIAGRAM_FILE), &outcome.rows)?;
    write_json(&out.join(HISTOGRAM_FILE), &outcome.histogram)?;
    let diagram_svg = out.join(DIAGRAM_SVG);
    fs::write(&diagram_svg, svg::diagram_svg(&outcome.rows)).map_err(CliError::io(&diagram_svg))?;
    let histogram_svg = out.join(HISTOGRAM_SVG);
    fs::write(&histogram_svg, svg::histogram_svg(&outcome.histogram)).map_err(CliError::io(&histogram_svg))?;
    if options.remap.is_some() {
        let path = out.join(REMAPPED_FILE);
        let file = File::create(&path).map_err(CliError::io(&path))?;
        outcome.history.write_jsonl(file).map_err(CliError::io(&path))?;
    }
    Ok(outcome)
}

/// A scripted system for `mwer simulate`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MockKind {
    Echo,
    /// Every chunk costs this many seconds.
    Delay(f64),
    /// Words wait for this much following audio.
    Context(f64),
}

impl FromStr for MockKind {
    type Err = String;

    /// `echo`, `delay:SECONDS` or `context:SECONDS`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, value) = s.split_once(':').map_or((s, None), |(n, v)| (n, Some(v)));
        let seconds = |default: f64| -> Result<f64, String> {
            value.map_or(Ok(default), |v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite() && *x >= 0.0)
                    .ok_or_else(|| format!("bad seconds `{v}`"))
            })
        };
        match name {
            "echo" => Ok(MockKind::Echo),
            "delay" => Ok(MockKind::Delay(seconds(0.1)?)),
            "context" => Ok(MockKind::Context(seconds(1.0)?)),
            other => Err(format!("unknown mock `{other}` (echo, delay:S, context:S)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimulateOptions {
    pub mock: MockKind,
    pub chunk: f64,
    pub pacing: Pacing,
    pub recording_id: String,
    /// Silence appended after the last word.
    pub tail: f64,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            mock: MockKind::Echo,
            chunk: 0.25,
            pacing: Pacing::Realtime,
            recording_id: "rec".into(),
            tail: 1.0,
        }
    }
}

/// Runs a mock system over audio covering `words` on a virtual clock.
pub fn simulate(words: &[TimedWord], options: &SimulateOptions) -> Result<SessionHistory, CliError> {
    // Negated so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(options.chunk > 0.0) {
        return Err(CliError::Usage("--chunk must be positive".into()));
    }
    let mut system = match options.mock {
        MockKind::Echo => TranscriptMock::echo(words.to_vec()),
        MockKind::Delay(d) => TranscriptMock::delay(words.to_vec(), d),
        MockKind::Context(c) => TranscriptMock::context(words.to_vec(), c),
    };
    let total = words.last().map_or(0.0, |w| w.end) + options.tail;
    let chunks = ((total / options.chunk).ceil() as usize).max(1);
    let plan = vec![(options.recording_id.clone(), vec![options.chunk; chunks])];
    Ok(run_session(
        &mut system,
        &plan,
        options.pacing,
        &mut VirtualClock::new(),
        SessionOptions::default(),
    )?)
}

pub fn cmd_simulate(timed_words: &Path, out: &Path, options: &SimulateOptions) -> Result<SessionHistory, CliError> {
    let words = read_timed_words(timed_words)?;
    let history = simulate(&words, options)?;
    let file = File::create(out).map_err(CliError::io(out))?;
    history.write_jsonl(file).map_err(CliError::io(out))?;
    Ok(history)
}

/// Resolves `--remap` and `--chunk-interval` into a schedule.
pub fn remap_schedule(remap: bool, chunk_interval: Option<f64>) -> Option<SendSchedule> {
    remap.then(|| chunk_interval.map_or(SendSchedule::ChunkDurations, SendSchedule::Interval))
}
