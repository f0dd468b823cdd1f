//! Side-by-side alignment of several hypotheses against one annotation.
//!
//! Each hypothesis is aligned on its own; the rows are then laid out over a
//! shared column spine. Reference columns are keyed by `(segment,
//! position)`, so the k-th token of every option of a block lands in the
//! same column and cells carry the option index they came from. Insertions
//! and wildcard-absorbed tokens go to slot columns after the reference
//! column they follow, padded to the longest run across rows.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::align::{flatten, AlignmentStep, FlatView, StepKind};
use crate::annotation::{apply_mode, Annotation};
use crate::exec::{self, Execution};
use crate::metrics::{evaluate_detailed, EvalConfig, EvalError, MetricReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Anchor {
    Start,
    Reference { segment: usize, position: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Reference,
    Insertion,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub kind: ColumnKind,
    /// For reference columns, the column's own key; for insertion slots,
    /// the reference column they follow.
    pub anchor: Anchor,
    /// Slot index inside an insertion group.
    pub slot: usize,
    /// Block ordinal when the column belongs to a multi-reference block.
    pub block: Option<usize>,
    pub wildcard: bool,
    /// Flat-view nodes shown in this column, ascending.
    pub nodes: Vec<usize>,
    /// Token text per entry of `nodes` (`<*>` for wildcards).
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub column: usize,
    pub kind: StepKind,
    #[serde(rename = "ref")]
    pub ref_text: Option<String>,
    #[serde(rename = "hyp")]
    pub hyp_text: Option<String>,
    pub ref_node: Option<usize>,
    /// Option index inside the block, when the reference token has one.
    pub option: Option<usize>,
    pub char_errors: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub cells: Vec<Cell>,
    pub report: MetricReport,
    pub ref_path: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiAlignment {
    pub annotation: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub column: usize,
    pub fraction: f64,
}

enum Placement {
    Reference(Anchor),
    Slot(Anchor, usize),
}

fn anchor_of(flat: &FlatView, node: usize) -> Anchor {
    let n = &flat.nodes[node];
    Anchor::Reference {
        segment: n.segment.expect("token node has a segment"),
        position: n.position,
    }
}

fn place(flat: &FlatView, steps: &[AlignmentStep]) -> Vec<Placement> {
    let mut last = Anchor::Start;
    let mut run = 0;
    steps
        .iter()
        .map(|step| match (step.kind, step.ref_node_id) {
            (StepKind::Insertion, _) | (StepKind::WildcardAbsorbed, None) => {
                run += 1;
                Placement::Slot(last, run - 1)
            }
            (StepKind::WildcardAbsorbed, Some(node)) => {
                let anchor = anchor_of(flat, node);
                if anchor != last {
                    last = anchor;
                    run = 0;
                }
                run += 1;
                Placement::Slot(last, run - 1)
            }
            (_, node) => {
                last = anchor_of(flat, node.expect("reference step has a node"));
                run = 0;
                Placement::Reference(last)
            }
        })
        .collect()
}

pub fn multi_align(
    annotation: &Annotation,
    hypotheses: &[(String, String)],
    config: &EvalConfig,
    execution: Execution,
) -> Result<MultiAlignment, EvalError> {
    let flat = flatten(&apply_mode(annotation, config.mode)?);
    let evaluations = exec::map(hypotheses, execution, |(_, text)| {
        evaluate_detailed(annotation, text, config)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let placements: Vec<Vec<Placement>> = evaluations.iter().map(|e| place(&flat, &e.alignment.steps)).collect();

    let mut reference: BTreeMap<Anchor, BTreeSet<usize>> = BTreeMap::new();
    let mut slots: BTreeMap<Anchor, usize> = BTreeMap::new();
    for (evaluation, row) in evaluations.iter().zip(&placements) {
        for &node in &evaluation.alignment.ref_path {
            if node != FlatView::START && node != flat.end() {
                reference.entry(anchor_of(&flat, node)).or_default().insert(node);
            }
        }
        for placement in row {
            if let Placement::Slot(anchor, index) = placement {
                let width = slots.entry(*anchor).or_default();
                *width = (*width).max(index + 1);
            }
        }
    }

    let mut columns = Vec::new();
    let mut reference_column = BTreeMap::new();
    let mut slot_column = BTreeMap::new();
    let mut push_slots = |columns: &mut Vec<Column>, anchor: Anchor| {
        for slot in 0..slots.get(&anchor).copied().unwrap_or(0) {
            slot_column.insert((anchor, slot), columns.len());
            columns.push(Column {
                kind: ColumnKind::Insertion,
                anchor,
                slot,
                block: None,
                wildcard: false,
                nodes: Vec::new(),
                labels: Vec::new(),
            });
        }
    };
    push_slots(&mut columns, Anchor::Start);
    for (&anchor, nodes) in &reference {
        let nodes: Vec<usize> = nodes.iter().copied().collect();
        let first = &flat.nodes[nodes[0]];
        reference_column.insert(anchor, columns.len());
        columns.push(Column {
            kind: ColumnKind::Reference,
            anchor,
            slot: 0,
            block: first.membership.map(|m| m.block),
            wildcard: first.is_wildcard(),
            labels: nodes
                .iter()
                .map(|&n| {
                    flat.nodes[n]
                        .token()
                        .map_or_else(|| crate::annotation::WILDCARD.to_string(), |t| t.text.clone())
                })
                .collect(),
            nodes,
        });
        push_slots(&mut columns, anchor);
    }

    let rows = evaluations
        .into_iter()
        .zip(placements)
        .zip(hypotheses)
        .map(|((evaluation, placement), (name, _))| {
            let cells = evaluation
                .alignment
                .steps
                .iter()
                .zip(placement)
                .map(|(step, placement)| Cell {
                    column: match placement {
                        Placement::Reference(anchor) => reference_column[&anchor],
                        Placement::Slot(anchor, index) => slot_column[&(anchor, index)],
                    },
                    kind: step.kind,
                    ref_text: step.ref_token.as_ref().map(|t| t.text.clone()),
                    hyp_text: step.hyp_token.as_ref().map(|t| t.text.clone()),
                    ref_node: step.ref_node_id,
                    option: step
                        .ref_node_id
                        .and_then(|n| flat.nodes[n].membership)
                        .map(|m| m.option),
                    char_errors: step.char_errors(&config.cost),
                })
                .collect();
            Row {
                name: name.clone(),
                cells,
                report: evaluation.report,
                ref_path: evaluation.alignment.ref_path,
            }
        })
        .collect();

    Ok(MultiAlignment {
        annotation: annotation.to_string(),
        columns,
        rows,
    })
}

/// Columns where at least `threshold` of the rows (and at least one row)
/// have an error, most contested first.
pub fn disagreement_report(ma: &MultiAlignment, threshold: f64) -> Vec<Disagreement> {
    if ma.rows.is_empty() {
        return Vec::new();
    }
    let mut in_error = vec![0usize; ma.columns.len()];
    for row in &ma.rows {
        let columns: BTreeSet<usize> = row
            .cells
            .iter()
            .filter(|c| c.kind.is_error())
            .map(|c| c.column)
            .collect();
        for column in columns {
            in_error[column] += 1;
        }
    }
    let rows = ma.rows.len() as f64;
    let mut report: Vec<Disagreement> = in_error
        .into_iter()
        .enumerate()
        .filter(|&(_, count)| count > 0)
        .map(|(column, count)| Disagreement {
            column,
            fraction: count as f64 / rows,
        })
        .filter(|d| d.fraction >= threshold)
        .collect();
    report.sort_by(|a, b| b.fraction.total_cmp(&a.fraction).then(a.column.cmp(&b.column)));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::align;
    use crate::annotation::{parse_annotation, tokenize, TokenizerConfig};

    fn parse(text: &str) -> Annotation {
        parse_annotation(text, &TokenizerConfig::default()).unwrap()
    }

    fn hyps(items: &[&str]) -> Vec<(String, String)> {
        items
            .iter()
            .enumerate()
            .map(|(i, h)| (format!("m{i}"), h.to_string()))
            .collect()
    }

    fn run(reference: &str, items: &[&str]) -> MultiAlignment {
        multi_align(
            &parse(reference),
            &hyps(items),
            &EvalConfig::default(),
            Execution::Sequential,
        )
        .unwrap()
    }

    #[test]
    fn single_row_spine_is_its_path() {
        let ma = run("a <*> {b|c} d", &["x a c d"]);
        let spine: Vec<usize> = ma
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Reference)
            .flat_map(|c| c.nodes.clone())
            .collect();
        let path = &ma.rows[0].ref_path;
        assert_eq!(spine, path[1..path.len() - 1]);
        assert_eq!(ma.columns[0].kind, ColumnKind::Insertion);
        assert_eq!(ma.rows[0].cells[0].column, 0);
    }

    #[test]
    fn identical_rows() {
        let ma = run("a b c", &["a x c", "a x c"]);
        assert_eq!(ma.rows[0].cells, ma.rows[1].cells);
    }

    #[test]
    fn options_share_a_block_column() {
        let ma = run("{one|1} apple", &["one apple", "1 apple"]);
        let first = &ma.rows[0].cells[0];
        let second = &ma.rows[1].cells[0];
        assert_eq!(first.kind, StepKind::Correct);
        assert_eq!(second.kind, StepKind::Correct);
        assert_eq!(first.column, second.column);
        assert_eq!((first.option, second.option), (Some(0), Some(1)));
        let column = &ma.columns[first.column];
        assert_eq!(column.labels, ["one", "1"]);
        assert_eq!(column.block, Some(0));
    }

    #[test]
    fn insertion_slots_pad_to_longest_run() {
        let ma = run("a b", &["a x b", "a x y z b"]);
        let slots: Vec<_> = ma.columns.iter().filter(|c| c.kind == ColumnKind::Insertion).collect();
        assert_eq!(slots.len(), 3);
        assert!(slots.iter().all(|c| c.anchor == ma.columns[0].anchor));
        let columns: Vec<_> = ma.rows[1].cells.iter().map(|c| c.column).collect();
        assert_eq!(columns, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn rows_project_to_standalone_alignments() {
        let annotation = parse("{the|a} quick <*> fox {jumps|jumped}");
        let items = [
            "the quick brown fox jumps",
            "quick fox",
            "a quick lazy brown dog jumped over",
        ];
        let ma = run("{the|a} quick <*> fox {jumps|jumped}", &items);
        for (row, hyp) in ma.rows.iter().zip(items) {
            let tokens = tokenize(hyp, &TokenizerConfig::default());
            let standalone = align(&flatten(&annotation), &tokens, &Default::default()).unwrap();
            let kinds: Vec<_> = standalone.steps.iter().map(|s| s.kind).collect();
            let projected: Vec<_> = row.cells.iter().map(|c| c.kind).collect();
            assert_eq!(projected, kinds);
            let columns: Vec<_> = row.cells.iter().map(|c| c.column).collect();
            assert!(columns.windows(2).all(|w| w[0] <= w[1]));
            for cell in &row.cells {
                if let Some(node) = cell.ref_node {
                    assert!(ma.columns[cell.column].nodes.contains(&node) || cell.kind == StepKind::WildcardAbsorbed);
                }
            }
        }
    }

    #[test]
    fn disagreement() {
        let ma = run("a b c", &["a b c", "a b c"]);
        assert!(disagreement_report(&ma, 0.0).is_empty());

        let ma = run("a b c", &["a x c", "a y c", "a z c", "a w c", "a v c", "a b c"]);
        let report = disagreement_report(&ma, 0.5);
        assert_eq!(report.len(), 1);
        assert!((report[0].fraction - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(ma.columns[report[0].column].labels, ["b"]);

        let ma = run("a b c", &["a x c", "a b", "a b c d"]);
        let report = disagreement_report(&ma, 0.0);
        assert_eq!(report.len(), 3);
        assert!(report.iter().all(|d| (d.fraction - 1.0 / 3.0).abs() < 1e-12));
    }
}
