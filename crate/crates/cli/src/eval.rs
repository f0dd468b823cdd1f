//! `mwer eval`: every hypothesis of every corpus record, plus per-system
//! aggregates with bootstrap intervals.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mwer_core::annotation::{parse_annotation, Mode};
use mwer_core::corpus::{read_corpus, CorpusRecord};
use mwer_core::exec;
use mwer_core::metrics::{aggregate, evaluate_sample, AggregateConfig, EvalConfig, MetricReport, Weighting};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, EXIT_FAILURES};

pub const REPORTS_FILE: &str = "reports.jsonl";
pub const AGGREGATE_FILE: &str = "aggregate.json";

#[derive(Clone, Debug, Default)]
pub struct EvalOptions {
    pub config: EvalConfig,
    pub aggregate: AggregateConfig,
    pub out: PathBuf,
}

/// One line of `reports.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub id: String,
    pub system: String,
    pub report: MetricReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    /// `None` when the record itself is unusable.
    pub system: Option<String>,
    pub error: String,
}

/// `aggregate.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateFile {
    pub v: u32,
    pub weighting: Weighting,
    pub seed: u64,
    pub resamples: usize,
    pub insertion_cap: Option<u32>,
    pub mode: Mode,
    pub systems: BTreeMap<String, MetricReport>,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub reports: Vec<SampleReport>,
    pub aggregate: AggregateFile,
}

impl EvalOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.aggregate.failures.is_empty() {
            0
        } else {
            EXIT_FAILURES
        }
    }

    /// Fixed-width per-system summary.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<20} {:>7} {:>8} {:>19} {:>8} {:>8}\n",
            "system", "samples", "WER%", "95% CI", "relaxed%", "CER%"
        );
        for (system, report) in &self.aggregate.systems {
            let ci = report.ci.map_or_else(
                || "-".to_string(),
                |[lo, hi]| format!("[{:.2}, {:.2}]", lo * 100.0, hi * 100.0),
            );
            out.push_str(&format!(
                "{:<20} {:>7} {:>8.2} {:>19} {:>8.2} {:>8.2}\n",
                system,
                report.samples,
                report.wer * 100.0,
                ci,
                report.wer_relaxed * 100.0,
                report.cer * 100.0
            ));
        }
        for failure in &self.aggregate.failures {
            let system = failure.system.as_deref().unwrap_or("*");
            out.push_str(&format!("FAILED {} [{}]: {}\n", failure.id, system, failure.error));
        }
        out
    }
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusRecord>, CliError> {
    let file = File::open(path).map_err(CliError::io(path))?;
    Ok(read_corpus(BufReader::new(file))?)
}

/// Evaluates `records` without touching the file system.
pub fn evaluate_records(records: &[CorpusRecord], options: &EvalOptions) -> Result<EvalOutcome, CliError> {
    let mut failures = Vec::new();
    let mut jobs = Vec::new();
    for record in records {
        match parse_annotation(&record.annotation, &options.config.tokenizer) {
            Ok(annotation) => {
                for (system, hypothesis) in &record.hypotheses {
                    jobs.push((
                        record.id.as_str(),
                        system.as_str(),
                        hypothesis.as_str(),
                        annotation.clone(),
                    ));
                }
            }
            Err(e) => failures.push(Failure {
                id: record.id.clone(),
                system: None,
                error: format!("{}: {e}", e.kind()),
            }),
        }
    }

    let results = exec::map(&jobs, options.aggregate.execution, |(_, _, hypothesis, annotation)| {
        evaluate_sample(annotation, hypothesis, &options.config)
    });

    let mut reports = Vec::new();
    let mut by_system: BTreeMap<String, Vec<MetricReport>> = BTreeMap::new();
    for ((id, system, _, _), result) in jobs.iter().zip(results) {
        match result {
            Ok(report) => {
                by_system.entry(system.to_string()).or_default().push(report.clone());
                reports.push(SampleReport {
                    id: id.to_string(),
                    system: system.to_string(),
                    report,
                });
            }
            Err(e) => failures.push(Failure {
                id: id.to_string(),
                system: Some(system.to_string()),
                error: e.to_string(),
            }),
        }
    }
    let systems = by_system
        .into_iter()
        .map(|(system, reports)| Ok((system, aggregate(&reports, &options.aggregate)?)))
        .collect::<Result<_, CliError>>()?;

    Ok(EvalOutcome {
        reports,
        aggregate: AggregateFile {
            v: 1,
            weighting: options.aggregate.weighting,
            seed: options.aggregate.seed,
            resamples: options.aggregate.resamples,
            insertion_cap: options.config.insertion_cap,
            mode: options.config.mode,
            systems,
            failures,
        },
    })
}

/// Evaluates a corpus file and writes `reports.jsonl` and `aggregate.json`
/// into `options.out`. Failed records are listed in the aggregate file and
/// reflected in [`EvalOutcome::exit_code`].
pub fn cmd_eval(corpus: &Path, options: &EvalOptions) -> Result<EvalOutcome, CliError> {
    let records = load_corpus(corpus)?;
    let outcome = evaluate_records(&records, options)?;

    fs::create_dir_all(&options.out).map_err(CliError::io(&options.out))?;
    let reports_path = options.out.join(REPORTS_FILE);
    let file = File::create(&reports_path).map_err(CliError::io(&reports_path))?;
    let mut writer = BufWriter::new(file);
    for line in &outcome.reports {
        serde_json::to_writer(&mut writer, line).map_err(CliError::json(&reports_path))?;
        writer.write_all(b"\n").map_err(CliError::io(&reports_path))?;
    }
    writer.flush().map_err(CliError::io(&reports_path))?;

    let aggregate_path = options.out.join(AGGREGATE_FILE);
    let mut text = serde_json::to_string_pretty(&outcome.aggregate).map_err(CliError::json(&aggregate_path))?;
    text.push('\n');
    fs::write(&aggregate_path, text).map_err(CliError::io(&aggregate_path))?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, annotation: &str, hyps: &[(&str, &str)]) -> CorpusRecord {
        let mut record = CorpusRecord::new(id, annotation);
        for (system, text) in hyps {
            record.hypotheses.insert(system.to_string(), text.to_string());
        }
        record
    }

    #[test]
    fn perfect_corpus() {
        let records = vec![
            record("a", "one two", &[("s", "one two")]),
            record("b", "{three|3}", &[("s", "3")]),
            record("c", "four <*>", &[("s", "four and more")]),
        ];
        let outcome = evaluate_records(&records, &EvalOptions::default()).unwrap();
        let s = &outcome.aggregate.systems["s"];
        assert_eq!(s.wer, 0.0);
        assert_eq!(s.samples, 3);
        assert_eq!(s.ci, Some([0.0, 0.0]));
        assert_eq!(outcome.exit_code(), 0);
    }

    #[test]
    fn failures_are_collected() {
        let records = vec![
            record("bad", "{a", &[("s", "a")]),
            record("strict", "{~x|~y}", &[("s", "x")]),
            record("ok", "a b", &[("s", "a")]),
        ];
        let options = EvalOptions {
            config: EvalConfig {
                mode: Mode::Strict,
                ..Default::default()
            },
            ..Default::default()
        };
        let outcome = evaluate_records(&records, &options).unwrap();
        assert_eq!(outcome.exit_code(), 1);
        let failed: Vec<(&str, Option<&str>)> = outcome
            .aggregate
            .failures
            .iter()
            .map(|f| (f.id.as_str(), f.system.as_deref()))
            .collect();
        assert_eq!(failed, [("bad", None), ("strict", Some("s"))]);
        assert!(outcome.aggregate.failures[0].error.starts_with("UnbalancedBrace"));
        assert_eq!(outcome.aggregate.systems["s"].wer, 0.5);
        assert!(outcome.table().contains("FAILED bad [*]"));
    }
}
