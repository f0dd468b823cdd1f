//! Independent reference implementations and generators shared by the
//! integration and acceptance tests. Nothing here calls the aligner.

#![allow(dead_code)]

pub mod streams;

use mwer_core::align::{Alignment, StepKind};
use mwer_core::annotation::{Annotation, Mode, Segment};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One reference item of a linear expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Word(String),
    Wildcard,
}

/// Every linear reading of `annotation` under `mode`, adjacent wildcards
/// merged. `None` when strict mode leaves a block without options.
pub fn expansions(annotation: &Annotation, mode: Mode) -> Option<Vec<Vec<Item>>> {
    let mut out: Vec<Vec<Item>> = vec![Vec::new()];
    for segment in &annotation.segments {
        match segment {
            Segment::Plain { token } => {
                for e in &mut out {
                    e.push(Item::Word(token.text.clone()));
                }
            }
            Segment::Wildcard => {
                for e in &mut out {
                    e.push(Item::Wildcard);
                }
            }
            Segment::Block { options } => {
                let kept: Vec<_> = options
                    .iter()
                    .filter(|o| mode == Mode::Permissive || !o.strict_violation)
                    .collect();
                if kept.is_empty() {
                    return None;
                }
                let mut next = Vec::with_capacity(out.len() * kept.len());
                for e in &out {
                    for option in &kept {
                        let mut e = e.clone();
                        e.extend(option.tokens.iter().map(|t| Item::Word(t.text.clone())));
                        next.push(e);
                    }
                }
                out = next;
            }
        }
    }
    for e in &mut out {
        e.dedup_by(|a, b| *a == Item::Wildcard && *b == Item::Wildcard);
    }
    Some(out)
}

/// Plain two-row character Levenshtein distance.
pub fn levenshtein(a: &str, b: &str) -> u32 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<u32> = (0..=b.len() as u32).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut row = vec![i as u32 + 1; b.len() + 1];
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + u32::from(ca != cb);
            row[j + 1] = sub.min(prev[j + 1] + 1).min(row[j] + 1);
        }
        prev = row;
    }
    prev[b.len()]
}

/// `(word_errors, -correct, char_errors)`: smaller is better under `Ord`.
pub type Score = (u32, i64, u32);

fn add(a: Score, b: Score) -> Score {
    (a.0 + b.0, a.1 + b.1, a.2 + b.2)
}

/// Best score of a linear reference against `hyp`. A wildcard matches any
/// run of hypothesis words, including none, at no cost. Insertions and
/// deletions are charged their word length in characters.
#[allow(clippy::needless_range_loop)]
pub fn linear_score(reference: &[Item], hyp: &[String]) -> Score {
    let n = reference.len();
    let m = hyp.len();
    let len = |s: &str| s.chars().count() as u32;
    let worst: Score = (u32::MAX / 4, 0, u32::MAX / 4);
    let mut d = vec![vec![worst; m + 1]; n + 1];
    d[0][0] = (0, 0, 0);
    for j in 1..=m {
        d[0][j] = add(d[0][j - 1], (1, 0, len(&hyp[j - 1])));
    }
    for i in 1..=n {
        match &reference[i - 1] {
            Item::Wildcard => {
                let mut best = worst;
                for j in 0..=m {
                    best = best.min(d[i - 1][j]);
                    d[i][j] = best;
                }
            }
            Item::Word(r) => {
                d[i][0] = add(d[i - 1][0], (1, 0, len(r)));
                for j in 1..=m {
                    let h = &hyp[j - 1];
                    let diag = if r == h {
                        add(d[i - 1][j - 1], (0, -1, 0))
                    } else {
                        add(d[i - 1][j - 1], (1, 0, levenshtein(r, h)))
                    };
                    let del = add(d[i - 1][j], (1, 0, len(r)));
                    let ins = add(d[i][j - 1], (1, 0, len(h)));
                    d[i][j] = diag.min(del).min(ins);
                }
            }
        }
    }
    d[n][m]
}

/// Minimum over every expansion.
pub fn oracle_score(annotation: &Annotation, mode: Mode, hyp: &[String]) -> Option<Score> {
    expansions(annotation, mode).map(|es| {
        es.iter()
            .map(|e| linear_score(e, hyp))
            .min()
            .expect("at least one expansion")
    })
}

/// Scores an alignment from its steps alone.
pub fn rescore(alignment: &Alignment) -> Score {
    let mut score = (0, 0, 0);
    for step in &alignment.steps {
        let r = step.ref_token.as_ref().map(|t| t.text.as_str());
        let h = step.hyp_token.as_ref().map(|t| t.text.as_str());
        let len = |s: Option<&str>| s.map_or(0, |s| s.chars().count() as u32);
        score = add(
            score,
            match step.kind {
                StepKind::Correct => {
                    assert_eq!(r, h, "correct step with different words");
                    (0, -1, 0)
                }
                StepKind::Replacement => {
                    assert_ne!(r, h, "replacement of identical words");
                    (1, 0, levenshtein(r.unwrap(), h.unwrap()))
                }
                StepKind::Insertion => (1, 0, len(h)),
                StepKind::Deletion => (1, 0, len(r)),
                StepKind::WildcardAbsorbed => (0, 0, 0),
            },
        );
    }
    score
}

/// Hypothesis words consumed by the steps, in order.
pub fn consumed_hypothesis(alignment: &Alignment) -> Vec<String> {
    alignment
        .steps
        .iter()
        .filter(|s| s.kind.consumes_hypothesis())
        .map(|s| s.hyp_token.as_ref().expect("consuming step has a word").text.clone())
        .collect()
}

/// Reference words the steps walk through, in order.
pub fn walked_reference(alignment: &Alignment) -> Vec<String> {
    alignment
        .steps
        .iter()
        .filter(|s| matches!(s.kind, StepKind::Correct | StepKind::Replacement | StepKind::Deletion))
        .map(|s| s.ref_token.as_ref().expect("reference step has a word").text.clone())
        .collect()
}

/// Number of insertion errors under a cap, computed from run lengths.
pub fn capped_insertions(alignment: &Alignment, cap: u64) -> u64 {
    let mut total = 0;
    let mut run = 0;
    for step in &alignment.steps {
        if step.kind == StepKind::Insertion {
            run += 1;
        } else {
            total += run.min(cap);
            run = 0;
        }
    }
    total + run.min(cap)
}

pub const VOCAB: &[&str] = &[
    "a",
    "an",
    "the",
    "cat",
    "cats",
    "sat",
    "mat",
    "on",
    "one",
    "two",
    "three",
    "ny",
    "new",
    "york",
    "hello",
    "hey",
    "well",
    "x",
    "multivariate",
    "multivariant",
];

pub fn word(rng: &mut ChaCha8Rng) -> String {
    VOCAB[rng.random_range(0..VOCAB.len())].to_string()
}

pub fn words(rng: &mut ChaCha8Rng, max: usize) -> Vec<String> {
    let n = rng.random_range(0..=max);
    (0..n).map(|_| word(rng)).collect()
}

pub struct AnnotationShape {
    pub max_segments: usize,
    pub max_blocks: usize,
    pub max_options: usize,
    pub max_option_len: usize,
    pub tilde: bool,
    pub wildcards: bool,
}

impl Default for AnnotationShape {
    fn default() -> Self {
        Self {
            max_segments: 6,
            max_blocks: 4,
            max_options: 3,
            max_option_len: 2,
            tilde: false,
            wildcards: false,
        }
    }
}

/// Random annotation source text.
pub fn annotation_text(rng: &mut ChaCha8Rng, shape: &AnnotationShape) -> String {
    let segments = rng.random_range(1..=shape.max_segments);
    let mut blocks = 0;
    let mut parts = Vec::new();
    for _ in 0..segments {
        let roll = rng.random_range(0..10);
        if roll < 4 && blocks < shape.max_blocks {
            blocks += 1;
            let n_options = rng.random_range(1..=shape.max_options);
            let options: Vec<String> = (0..n_options)
                .map(|_| {
                    let len = rng.random_range(0..=shape.max_option_len);
                    let body = (0..len).map(|_| word(rng)).collect::<Vec<_>>().join(" ");
                    if shape.tilde && !body.is_empty() && rng.random_bool(0.25) {
                        format!("~{body}")
                    } else {
                        body
                    }
                })
                .collect();
            parts.push(format!("{{{}}}", options.join("|")));
        } else if roll == 4 && shape.wildcards {
            parts.push("<*>".to_string());
        } else {
            parts.push(word(rng));
        }
    }
    parts.join(" ")
}

/// A hypothesis near some reading of the annotation: a random expansion
/// with edits applied, or pure noise.
pub fn near_hypothesis(rng: &mut ChaCha8Rng, annotation: &Annotation, max_len: usize) -> Vec<String> {
    let base: Vec<String> = match expansions(annotation, Mode::Permissive) {
        Some(es) if rng.random_bool(0.8) => {
            let e = &es[rng.random_range(0..es.len())];
            e.iter()
                .flat_map(|item| match item {
                    Item::Word(w) => vec![w.clone()],
                    Item::Wildcard => words(rng, 2),
                })
                .collect()
        }
        _ => words(rng, max_len),
    };
    let mut hyp = Vec::new();
    for w in base {
        match rng.random_range(0..10) {
            0 => {}
            1 => hyp.push(word(rng)),
            2 => {
                hyp.push(w);
                hyp.push(word(rng));
            }
            _ => hyp.push(w),
        }
    }
    hyp.truncate(max_len);
    hyp
}
