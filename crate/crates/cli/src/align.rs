//! `mwer align`: one reference against one hypothesis.

use anstyle::{AnsiColor, Style};
use mwer_core::align::{Alignment, StepKind};
use mwer_core::annotation::parse_annotation;
use mwer_core::metrics::{evaluate_detailed, EvalConfig, MetricReport};
use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Debug, Default)]
pub struct AlignOptions {
    pub config: EvalConfig,
    pub json: bool,
    pub color: bool,
}

#[derive(Serialize)]
struct AlignOutput<'a> {
    alignment: &'a Alignment,
    report: &'a MetricReport,
}

/// Aligns `hypothesis` against the annotation `reference` and renders the
/// result as JSON or as a three-line table.
pub fn cmd_align(reference: &str, hypothesis: &str, options: &AlignOptions) -> Result<String, CliError> {
    let annotation = parse_annotation(reference, &options.config.tokenizer)?;
    let eval = evaluate_detailed(&annotation, hypothesis, &options.config)?;
    if options.json {
        let output = AlignOutput {
            alignment: &eval.alignment,
            report: &eval.report,
        };
        let mut text = serde_json::to_string_pretty(&output).expect("alignment serializes");
        text.push('\n');
        return Ok(text);
    }
    Ok(render_table(&eval.alignment, &eval.report, options.color))
}

pub fn step_style(kind: StepKind) -> Style {
    let color = match kind {
        StepKind::Correct => AnsiColor::Green,
        StepKind::Replacement => AnsiColor::Red,
        StepKind::Deletion => AnsiColor::Magenta,
        StepKind::Insertion => AnsiColor::Yellow,
        StepKind::WildcardAbsorbed => return Style::new().dimmed(),
    };
    Style::new().fg_color(Some(color.into()))
}

fn step_label(kind: StepKind) -> &'static str {
    match kind {
        StepKind::Correct => "",
        StepKind::Replacement => "S",
        StepKind::Deletion => "D",
        StepKind::Insertion => "I",
        StepKind::WildcardAbsorbed => "~",
    }
}

fn pad(text: &str, width: usize) -> String {
    let fill = width.saturating_sub(text.chars().count());
    format!("{text}{}", " ".repeat(fill))
}

fn render_table(alignment: &Alignment, report: &MetricReport, color: bool) -> String {
    let mut lines = [String::from("REF "), String::from("HYP "), String::from("    ")];
    for step in &alignment.steps {
        let reference = step.ref_token.as_ref().map(|t| t.text.clone());
        let hypothesis = step.hyp_token.as_ref().map(|t| t.text.clone());
        let width = [&reference, &hypothesis]
            .iter()
            .map(|t| t.as_ref().map_or(1, |t| t.chars().count()))
            .max()
            .unwrap_or(1);
        let cells = [
            reference.unwrap_or_else(|| "*".repeat(width)),
            hypothesis.unwrap_or_else(|| "*".repeat(width)),
            step_label(step.kind).to_string(),
        ];
        let style = if color { step_style(step.kind) } else { Style::new() };
        for (line, cell) in lines.iter_mut().zip(cells) {
            line.push(' ');
            line.push_str(&format!("{style}{}{style:#}", pad(&cell, width)));
        }
    }
    let c = report.counts;
    let mut out = String::new();
    for line in lines {
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out.push_str(&format!(
        "WER {:.2}% (relaxed {:.2}%)  CER {:.2}%  S={} D={} I={} C={}  ref_words={}\n",
        report.wer * 100.0,
        report.wer_relaxed * 100.0,
        report.cer * 100.0,
        c.replacements,
        c.deletions,
        c.insertions_raw,
        c.correct,
        report.ref_words,
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain() -> AlignOptions {
        AlignOptions::default()
    }

    #[test]
    fn option_match_is_perfect() {
        let options = AlignOptions { json: true, ..plain() };
        let text = cmd_align("{one|1}", "1", &options).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["report"]["wer"], 0.0);
        assert_eq!(value["alignment"]["steps"][0]["kind"], "correct");
    }

    #[test]
    fn identity_table() {
        let text = cmd_align("a", "a", &plain()).unwrap();
        assert!(text.starts_with("REF  a\nHYP  a\n"), "{text}");
        assert!(text.contains("WER 0.00%"));
    }

    #[test]
    fn table_marks_errors() {
        let text = cmd_align("the cat sat", "the bat sat down", &plain()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "REF  the cat sat ****");
        assert_eq!(lines[1], "HYP  the bat sat down");
        assert_eq!(lines[2], "         S       I");
    }

    #[test]
    fn color_only_when_asked() {
        let colored = AlignOptions { color: true, ..plain() };
        assert!(cmd_align("a", "b", &colored).unwrap().contains('\u{1b}'));
        assert!(!cmd_align("a", "b", &plain()).unwrap().contains('\u{1b}'));
    }

    #[test]
    fn parse_error_names_span() {
        let err = cmd_align("{a", "a", &plain()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let message = err.to_string();
        assert!(message.starts_with("UnbalancedBrace"), "{message}");
        assert!(message.contains("byte 0"), "{message}");
    }
}
