//! Static SVG renderings of streaming diagrams and histograms, built from
//! string templates.

use std::fmt::Write;

use mwer_core::streaming::{Category, PartialAlignmentRow, StreamingHistogram};

const WIDTH: f64 = 900.0;
const MARGIN: f64 = 50.0;
const ROW_HEIGHT: f64 = 14.0;
const ROW_GAP: f64 = 4.0;
const WORD_WIDTH: f64 = 8.0;

pub const CORRECT: &str = "#2ca02c";
pub const ERROR: &str = "#ff7f0e";
pub const NOT_YET: &str = "#a0a0a0";
pub const ABSORBED: &str = "#dddddd";

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn category_color(category: Category) -> &'static str {
    match category {
        Category::Correct => CORRECT,
        Category::Error => ERROR,
        Category::NotYetTranscribed => NOT_YET,
        Category::WildcardAbsorbed => ABSORBED,
    }
}

fn open(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// One band per row: a tick per word at its audio time, colored by
/// category, and a black bar marking how much audio had been sent.
pub fn diagram_svg(rows: &[PartialAlignmentRow]) -> String {
    let t_max = rows
        .iter()
        .flat_map(|r| r.steps.iter().map(|s| s.time).chain([r.audio_sent]))
        .fold(1e-9_f64, f64::max);
    let plot = WIDTH - 2.0 * MARGIN;
    let x = |t: f64| MARGIN + plot * t / t_max;
    let height = 2.0 * MARGIN + rows.len() as f64 * (ROW_HEIGHT + ROW_GAP);

    let mut out = String::new();
    open(&mut out, WIDTH, height, "Partial alignments over time");
    for (i, row) in rows.iter().enumerate() {
        let y = MARGIN + i as f64 * (ROW_HEIGHT + ROW_GAP);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.2}s</text>"#,
            MARGIN - 4.0,
            y + ROW_HEIGHT - 3.0,
            row.eval_time
        );
        for step in &row.steps {
            let word = step
                .step
                .ref_token
                .as_ref()
                .or(step.step.hyp_token.as_ref())
                .map_or("", |t| t.text.as_str());
            let hyp = step.step.hyp_token.as_ref().map_or("", |t| t.text.as_str());
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="{WORD_WIDTH}" height="{ROW_HEIGHT}" fill="{}"><title>{} / {} ({:?})</title></rect>"#,
                x(step.time) - WORD_WIDTH / 2.0,
                y,
                category_color(step.category),
                escape(word),
                escape(hyp),
                step.category
            );
        }
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="2" height="{ROW_HEIGHT}" fill="black"/>"#,
            x(row.audio_sent) - 1.0,
            y
        );
    }
    let axis_y = height - MARGIN + 12.0;
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{axis_y:.1}" x2="{:.1}" y2="{axis_y:.1}" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    let step = nice_step(t_max);
    let mut t = 0.0;
    while t <= t_max + 1e-9 {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{t:.1}</text>"#,
            x(t),
            axis_y + 14.0
        );
        t += step;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">audio time, s</text>"#,
        WIDTH / 2.0,
        axis_y + 30.0
    );
    out.push_str("</svg>\n");
    out
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 10.0;
    let magnitude = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * magnitude)
        .find(|s| *s >= raw)
        .unwrap_or(raw)
}

/// Stacked correct / error / not-yet fractions per prescription bin.
pub fn histogram_svg(histogram: &StreamingHistogram) -> String {
    let height = 320.0;
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = height - 2.0 * MARGIN;
    let (lo, hi) = match (histogram.bin_edges.first(), histogram.bin_edges.last()) {
        (Some(&lo), Some(&hi)) if hi > lo => (lo, hi),
        _ => (0.0, 1.0),
    };
    let x = |p: f64| MARGIN + plot_w * (p - lo) / (hi - lo);

    let mut out = String::new();
    open(&mut out, WIDTH, height, "Prescription histogram");
    for (bin, edges) in histogram.bins.iter().zip(histogram.bin_edges.windows(2)) {
        let (correct, error, not_yet) = bin.fractions();
        let mut top = height - MARGIN;
        for (fraction, color) in [(correct, CORRECT), (error, ERROR), (not_yet, NOT_YET)] {
            if fraction <= 0.0 {
                continue;
            }
            let h = fraction * plot_h;
            top -= h;
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{color}"><title>[{:.2}, {:.2}): {} words</title></rect>"#,
                x(edges[0]),
                top,
                (x(edges[1]) - x(edges[0]) - 1.0).max(0.5),
                h,
                edges[0],
                edges[1],
                bin.total()
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        height - MARGIN,
        WIDTH - MARGIN,
        height - MARGIN
    );
    let mut p = lo.ceil();
    while p <= hi + 1e-9 {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{p:.0}</text>"#,
            x(p),
            height - MARGIN + 14.0
        );
        p += 1.0;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">prescription (audio sent − word center), s</text>"#,
        WIDTH / 2.0,
        height - MARGIN + 30.0
    );
    out.push_str("</svg>\n");
    out
}
