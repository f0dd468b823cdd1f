//! WER/CER from alignments, with the relaxed insertion penalty and corpus
//! aggregation.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{align, align_chars, flatten, AlignError, Alignment, CostConfig, FlatView, StepKind};
use crate::annotation::{apply_mode, tokenize, Annotation, Mode, ModeError, TokenizerConfig};
use crate::exec::{self, Execution};

pub const DEFAULT_INSERTION_CAP: u32 = 4;
pub const DEFAULT_RESAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub correct: u64,
    pub replacements: u64,
    pub deletions: u64,
    pub insertions_raw: u64,
    /// Each maximal run of insertions contributes `min(run, cap)`.
    pub insertions_capped: u64,
    pub wildcard_absorbed: u64,
    /// Non-wildcard reference tokens on the aligned path.
    pub ref_len: u64,
}

impl ErrorCounts {
    pub fn errors(&self, relaxed: bool) -> u64 {
        let insertions = if relaxed {
            self.insertions_capped
        } else {
            self.insertions_raw
        };
        self.replacements + self.deletions + insertions
    }

    /// Errors against an empty reference.
    pub fn is_degenerate(&self) -> bool {
        self.ref_len == 0 && self.errors(false) > 0
    }
}

impl std::ops::Add for ErrorCounts {
    type Output = ErrorCounts;

    fn add(self, rhs: ErrorCounts) -> ErrorCounts {
        ErrorCounts {
            correct: self.correct + rhs.correct,
            replacements: self.replacements + rhs.replacements,
            deletions: self.deletions + rhs.deletions,
            insertions_raw: self.insertions_raw + rhs.insertions_raw,
            insertions_capped: self.insertions_capped + rhs.insertions_capped,
            wildcard_absorbed: self.wildcard_absorbed + rhs.wildcard_absorbed,
            ref_len: self.ref_len + rhs.ref_len,
        }
    }
}

impl std::iter::Sum for ErrorCounts {
    fn sum<I: Iterator<Item = ErrorCounts>>(iter: I) -> Self {
        iter.fold(ErrorCounts::default(), |a, b| a + b)
    }
}

/// Tallies step kinds. `cap = None` disables insertion capping.
pub fn count_errors(alignment: &Alignment, cap: Option<u32>) -> ErrorCounts {
    let mut counts = ErrorCounts::default();
    let mut run = 0u64;
    let close_run = |counts: &mut ErrorCounts, run: &mut u64| {
        counts.insertions_capped += match cap {
            Some(cap) => (*run).min(u64::from(cap)),
            None => *run,
        };
        *run = 0;
    };
    for step in &alignment.steps {
        if step.kind == StepKind::Insertion {
            counts.insertions_raw += 1;
            run += 1;
            continue;
        }
        close_run(&mut counts, &mut run);
        match step.kind {
            StepKind::Correct => counts.correct += 1,
            StepKind::Replacement => counts.replacements += 1,
            StepKind::Deletion => counts.deletions += 1,
            StepKind::WildcardAbsorbed => counts.wildcard_absorbed += 1,
            StepKind::Insertion => unreachable!(),
        }
    }
    close_run(&mut counts, &mut run);
    counts.ref_len = counts.correct + counts.replacements + counts.deletions;
    counts
}

fn ratio(errors: u64, denominator: u64) -> f64 {
    if denominator == 0 {
        // 0/0 is a perfect score; n/0 is reported over 1 and flagged.
        errors as f64
    } else {
        errors as f64 / denominator as f64
    }
}

/// `(S + D + I) / ref_len`, with capped insertions when `relaxed`.
pub fn compute_wer(counts: &ErrorCounts, relaxed: bool) -> f64 {
    ratio(counts.errors(relaxed), counts.ref_len)
}

/// Reference length used as the WER denominator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Tokens on the path the hypothesis was aligned against.
    #[default]
    PathLength,
    ShortestExpansion,
    LongestExpansion,
}

impl fmt::Display for Denominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Denominator::PathLength => "path_length",
            Denominator::ShortestExpansion => "shortest_expansion",
            Denominator::LongestExpansion => "longest_expansion",
        })
    }
}

/// Token count of the shortest or longest start-to-end path.
pub fn expansion_length(flat: &FlatView, longest: bool) -> u64 {
    let mut best = vec![None::<u64>; flat.len()];
    best[FlatView::START] = Some(0);
    for v in 1..flat.len() {
        let weight = u64::from(flat.nodes[v].token().is_some());
        best[v] = flat.predecessors[v]
            .iter()
            .filter_map(|&u| best[u])
            .reduce(|a, b| if longest { a.max(b) } else { a.min(b) })
            .map(|x| x + weight);
    }
    best[flat.end()].unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub tokenizer: TokenizerConfig,
    pub mode: Mode,
    pub insertion_cap: Option<u32>,
    pub cost: CostConfig,
    pub denominator: Denominator,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tokenizer: TokenizerConfig::default(),
            mode: Mode::Permissive,
            insertion_cap: Some(DEFAULT_INSERTION_CAP),
            cost: CostConfig::default(),
            denominator: Denominator::PathLength,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub wer: f64,
    pub wer_relaxed: f64,
    pub cer: f64,
    pub mode: Mode,
    pub counts: ErrorCounts,
    pub char_counts: ErrorCounts,
    pub denominator: Denominator,
    /// Word and character reference lengths actually divided by.
    pub ref_words: u64,
    pub ref_chars: u64,
    pub degenerate: bool,
    pub samples: usize,
    /// Bootstrap 95% interval of `wer`; aggregates only.
    pub ci: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error("cannot aggregate an empty corpus")]
    EmptyCorpus,
    #[error("cannot aggregate reports from different modes")]
    MixedModes,
}

/// A report together with the word-level alignment it was computed from.
#[derive(Clone, Debug)]
pub struct SampleEvaluation {
    pub report: MetricReport,
    pub alignment: Alignment,
    pub flat: FlatView,
}

pub fn evaluate_sample(
    annotation: &Annotation,
    hypothesis: &str,
    config: &EvalConfig,
) -> Result<MetricReport, EvalError> {
    evaluate_detailed(annotation, hypothesis, config).map(|e| e.report)
}

pub fn evaluate_detailed(
    annotation: &Annotation,
    hypothesis: &str,
    config: &EvalConfig,
) -> Result<SampleEvaluation, EvalError> {
    let tokens = tokenize(hypothesis, &config.tokenizer);
    let moded = apply_mode(annotation, config.mode)?;
    let flat = flatten(&moded);
    let alignment = align(&flat, &tokens, &config.cost)?;
    let char_alignment = align_chars(&flat, &tokens, &config.cost)?;

    let counts = count_errors(&alignment, config.insertion_cap);
    let char_counts = count_errors(&char_alignment, None);
    let (ref_words, ref_chars) = match config.denominator {
        Denominator::PathLength => (counts.ref_len, char_counts.ref_len),
        policy => {
            let longest = policy == Denominator::LongestExpansion;
            (
                expansion_length(&flat, longest),
                expansion_length(&flat.to_char_level(), longest),
            )
        }
    };
    let report = MetricReport {
        wer: ratio(counts.errors(false), ref_words),
        wer_relaxed: ratio(counts.errors(true), ref_words),
        cer: ratio(char_counts.errors(false), ref_chars),
        mode: config.mode,
        counts,
        char_counts,
        denominator: config.denominator,
        ref_words,
        ref_chars,
        degenerate: ref_words == 0 && counts.errors(false) > 0,
        samples: 1,
        ci: None,
    };
    Ok(SampleEvaluation {
        report,
        alignment,
        flat,
    })
}

/// Evaluates many `(annotation, hypothesis)` pairs, keeping input order.
pub fn evaluate_corpus(
    samples: &[(Annotation, String)],
    config: &EvalConfig,
    execution: Execution,
) -> Vec<Result<MetricReport, EvalError>> {
    exec::map(samples, execution, |(annotation, hypothesis)| {
        evaluate_sample(annotation, hypothesis, config)
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Pool counts, then divide.
    #[default]
    Micro,
    /// Average per-sample ratios.
    Macro,
}

impl std::str::FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "micro" => Ok(Weighting::Micro),
            "macro" => Ok(Weighting::Macro),
            other => Err(format!("unknown weighting `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateConfig {
    pub weighting: Weighting,
    pub resamples: usize,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for AggregateConfig {
    fn default() -> Self {
        Self {
            weighting: Weighting::Micro,
            resamples: DEFAULT_RESAMPLES,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

struct Pooled {
    wer: f64,
    wer_relaxed: f64,
    cer: f64,
}

fn pool<'a>(reports: impl Iterator<Item = &'a MetricReport> + Clone, weighting: Weighting) -> Pooled {
    match weighting {
        Weighting::Micro => {
            let (mut raw, mut relaxed, mut words, mut chars, mut char_errors) = (0, 0, 0, 0, 0);
            for r in reports {
                raw += r.counts.errors(false);
                relaxed += r.counts.errors(true);
                words += r.ref_words;
                chars += r.ref_chars;
                char_errors += r.char_counts.errors(false);
            }
            Pooled {
                wer: ratio(raw, words),
                wer_relaxed: ratio(relaxed, words),
                cer: ratio(char_errors, chars),
            }
        }
        Weighting::Macro => {
            let n = reports.clone().count() as f64;
            let mean = |f: fn(&MetricReport) -> f64| reports.clone().map(f).sum::<f64>() / n;
            Pooled {
                wer: mean(|r| r.wer),
                wer_relaxed: mean(|r| r.wer_relaxed),
                cer: mean(|r| r.cer),
            }
        }
    }
}

/// Percentile bootstrap over samples. Resample `i` draws from its own
/// ChaCha stream, so the interval is identical under either execution.
pub fn bootstrap_ci(reports: &[MetricReport], config: &AggregateConfig) -> Option<[f64; 2]> {
    if reports.is_empty() || config.resamples == 0 {
        return None;
    }
    let n = reports.len();
    let mut stats = exec::map_range(config.resamples, config.execution, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(i as u64);
        let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        pool(picks.iter().map(|&k| &reports[k]), config.weighting).wer
    });
    stats.sort_by(f64::total_cmp);
    let at = |q: f64| stats[((q * (stats.len() - 1) as f64).round() as usize).min(stats.len() - 1)];
    Some([at(0.025), at(0.975)])
}

pub fn aggregate(reports: &[MetricReport], config: &AggregateConfig) -> Result<MetricReport, EvalError> {
    let first = reports.first().ok_or(EvalError::EmptyCorpus)?;
    if reports.iter().any(|r| r.mode != first.mode) {
        return Err(EvalError::MixedModes);
    }
    let pooled = pool(reports.iter(), config.weighting);
    let counts: ErrorCounts = reports.iter().map(|r| r.counts).sum();
    Ok(MetricReport {
        wer: pooled.wer,
        wer_relaxed: pooled.wer_relaxed,
        cer: pooled.cer,
        mode: first.mode,
        counts,
        char_counts: reports.iter().map(|r| r.char_counts).sum(),
        denominator: first.denominator,
        ref_words: reports.iter().map(|r| r.ref_words).sum(),
        ref_chars: reports.iter().map(|r| r.ref_chars).sum(),
        degenerate: reports.iter().any(|r| r.degenerate),
        samples: reports.len(),
        ci: bootstrap_ci(reports, config),
    })
}
