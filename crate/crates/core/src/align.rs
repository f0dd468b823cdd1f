//! Multi-reference alignment.
//!
//! An [`Annotation`] is flattened into a DAG of reference nodes framed by
//! start/end sentinels. Alignment is a Needleman-Wunsch fill over
//! `(node, hypothesis position)` states, where a state may be entered from
//! any DAG predecessor instead of only the previous row. Cells hold a
//! [`ScoreTuple`] compared lexicographically: word errors first, then the
//! configured tie-break components.
//!
//! Wildcard nodes cost nothing to enter or skip, and hypothesis tokens
//! consumed while sitting on a wildcard are absorbed without error.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{Annotation, Segment, Token};

/// Where a node came from in the annotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OptionRef {
    /// Ordinal of the block among the annotation's blocks.
    pub block: usize,
    pub option: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeKind {
    Start,
    End,
    Token { token: Token },
    Wildcard,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatNode {
    pub kind: NodeKind,
    /// Annotation segment index; `None` for sentinels.
    pub segment: Option<usize>,
    /// Position inside the option (or 0 for plain tokens and wildcards).
    pub position: usize,
    pub membership: Option<OptionRef>,
}

impl FlatNode {
    fn sentinel(kind: NodeKind) -> Self {
        Self {
            kind,
            segment: None,
            position: 0,
            membership: None,
        }
    }

    pub fn token(&self) -> Option<&Token> {
        match &self.kind {
            NodeKind::Token { token } => Some(token),
            _ => None,
        }
    }

    pub fn is_wildcard(&self) -> bool {
        matches!(self.kind, NodeKind::Wildcard)
    }
}

/// Reference DAG. Node 0 is the start sentinel, the last node is the end
/// sentinel, and every edge points to a higher index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatView {
    pub nodes: Vec<FlatNode>,
    pub successors: Vec<Vec<usize>>,
    pub predecessors: Vec<Vec<usize>>,
}

impl FlatView {
    pub const START: usize = 0;

    pub fn end(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.successors[from].binary_search(&to).is_ok()
    }

    /// Finds the first token node with the given text.
    pub fn find(&self, text: &str) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n.token().is_some_and(|t| t.text == text))
    }

    fn from_edges(nodes: Vec<FlatNode>, edges: Vec<(usize, usize)>) -> Self {
        let mut successors = vec![Vec::new(); nodes.len()];
        let mut predecessors = vec![Vec::new(); nodes.len()];
        for (from, to) in edges {
            debug_assert!(from < to);
            successors[from].push(to);
            predecessors[to].push(from);
        }
        for list in successors.iter_mut().chain(predecessors.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Self {
            nodes,
            successors,
            predecessors,
        }
    }

    /// Expands every token node into a chain of single-character nodes.
    /// Wildcards stay single nodes; edges between words connect the last
    /// character of one word to the first character of the next.
    pub fn to_char_level(&self) -> FlatView {
        let mut nodes = Vec::new();
        let mut span = Vec::with_capacity(self.nodes.len());
        let mut edges = Vec::new();
        for node in &self.nodes {
            let first = nodes.len();
            match &node.kind {
                NodeKind::Token { token } => {
                    for (i, ch) in token.text.chars().enumerate() {
                        if i > 0 {
                            edges.push((nodes.len() - 1, nodes.len()));
                        }
                        nodes.push(FlatNode {
                            kind: NodeKind::Token {
                                token: Token::new(ch.to_string()),
                            },
                            segment: node.segment,
                            position: node.position,
                            membership: node.membership,
                        });
                    }
                }
                _ => nodes.push(node.clone()),
            }
            span.push((first, nodes.len() - 1));
        }
        for (from, succ) in self.successors.iter().enumerate() {
            for &to in succ {
                edges.push((span[from].1, span[to].0));
            }
        }
        FlatView::from_edges(nodes, edges)
    }
}

/// Builds the reference DAG. Plain tokens chain in order; each block
/// option is a chain from the current frontier, and an empty option keeps
/// the frontier alive (skip edge). Consecutive wildcards merge.
pub fn flatten(annotation: &Annotation) -> FlatView {
    let mut nodes = vec![FlatNode::sentinel(NodeKind::Start)];
    let mut edges = Vec::new();
    let mut frontier = vec![FlatView::START];
    let mut block_ordinal = 0;
    let mut previous_wildcard = false;

    let push = |nodes: &mut Vec<FlatNode>, node: FlatNode| {
        nodes.push(node);
        nodes.len() - 1
    };

    for (segment_index, segment) in annotation.segments.iter().enumerate() {
        match segment {
            Segment::Plain { token } => {
                let id = push(
                    &mut nodes,
                    FlatNode {
                        kind: NodeKind::Token { token: token.clone() },
                        segment: Some(segment_index),
                        position: 0,
                        membership: None,
                    },
                );
                edges.extend(frontier.iter().map(|&f| (f, id)));
                frontier = vec![id];
                previous_wildcard = false;
            }
            Segment::Wildcard => {
                if previous_wildcard {
                    continue;
                }
                let id = push(
                    &mut nodes,
                    FlatNode {
                        kind: NodeKind::Wildcard,
                        segment: Some(segment_index),
                        position: 0,
                        membership: None,
                    },
                );
                edges.extend(frontier.iter().map(|&f| (f, id)));
                frontier.push(id);
                previous_wildcard = true;
            }
            Segment::Block { options } => {
                let mut next_frontier = Vec::new();
                for (option_index, option) in options.iter().enumerate() {
                    if option.is_empty() {
                        next_frontier.extend(frontier.iter().copied());
                        continue;
                    }
                    let mut tail = frontier.clone();
                    for (position, token) in option.tokens.iter().enumerate() {
                        let id = push(
                            &mut nodes,
                            FlatNode {
                                kind: NodeKind::Token { token: token.clone() },
                                segment: Some(segment_index),
                                position,
                                membership: Some(OptionRef {
                                    block: block_ordinal,
                                    option: option_index,
                                }),
                            },
                        );
                        edges.extend(tail.iter().map(|&f| (f, id)));
                        tail = vec![id];
                    }
                    next_frontier.extend(tail);
                }
                next_frontier.sort_unstable();
                next_frontier.dedup();
                frontier = next_frontier;
                block_ordinal += 1;
                // `<*> {} <*>` keeps two wildcard nodes; only adjacent ones merge.
                previous_wildcard = false;
            }
        }
    }
    let end = push(&mut nodes, FlatNode::sentinel(NodeKind::End));
    edges.extend(frontier.iter().map(|&f| (f, end)));
    FlatView::from_edges(nodes, edges)
}

/// Lexicographic alignment cost. The default order minimizes word errors,
/// then maximizes correct matches, then minimizes character errors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScoreTuple {
    pub word_errors: u32,
    pub correct_matches: u32,
    pub char_errors: u32,
}

impl ScoreTuple {
    pub const ZERO: ScoreTuple = ScoreTuple {
        word_errors: 0,
        correct_matches: 0,
        char_errors: 0,
    };

    pub fn new(word_errors: u32, correct_matches: u32, char_errors: u32) -> Self {
        Self {
            word_errors,
            correct_matches,
            char_errors,
        }
    }

    fn add(self, other: ScoreTuple) -> ScoreTuple {
        ScoreTuple {
            word_errors: self.word_errors.saturating_add(other.word_errors),
            correct_matches: self.correct_matches.saturating_add(other.correct_matches),
            char_errors: self.char_errors.saturating_add(other.char_errors),
        }
    }
}

impl std::ops::Add for ScoreTuple {
    type Output = ScoreTuple;

    fn add(self, rhs: ScoreTuple) -> ScoreTuple {
        ScoreTuple::add(self, rhs)
    }
}

impl Ord for ScoreTuple {
    fn cmp(&self, other: &Self) -> Ordering {
        self.word_errors
            .cmp(&other.word_errors)
            .then(other.correct_matches.cmp(&self.correct_matches))
            .then(self.char_errors.cmp(&other.char_errors))
    }
}

impl PartialOrd for ScoreTuple {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ScoreTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            self.word_errors, self.correct_matches, self.char_errors
        )
    }
}

/// Secondary score components, compared only when word errors tie.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// More correct matches is better.
    CorrectMatches,
    /// Fewer character errors is better.
    CharErrors,
}

/// Character cost charged for an inserted or deleted token.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndelCharCost {
    #[default]
    TokenLength,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    pub tie_breaks: Vec<TieBreak>,
    pub indel_char_cost: IndelCharCost,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            tie_breaks: vec![TieBreak::CorrectMatches, TieBreak::CharErrors],
            indel_char_cost: IndelCharCost::TokenLength,
        }
    }
}

impl CostConfig {
    /// Word errors only; every optimum ties.
    pub fn word_errors_only() -> Self {
        Self {
            tie_breaks: Vec::new(),
            indel_char_cost: IndelCharCost::TokenLength,
        }
    }

    pub fn compare(&self, a: &ScoreTuple, b: &ScoreTuple) -> Ordering {
        let mut order = a.word_errors.cmp(&b.word_errors);
        for tie in &self.tie_breaks {
            if order != Ordering::Equal {
                break;
            }
            order = match tie {
                TieBreak::CorrectMatches => b.correct_matches.cmp(&a.correct_matches),
                TieBreak::CharErrors => a.char_errors.cmp(&b.char_errors),
            };
        }
        order
    }

    fn is_default_order(&self) -> bool {
        self.tie_breaks == [TieBreak::CorrectMatches, TieBreak::CharErrors]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Correct,
    Replacement,
    Insertion,
    Deletion,
    WildcardAbsorbed,
}

impl StepKind {
    pub fn is_error(self) -> bool {
        matches!(self, StepKind::Replacement | StepKind::Insertion | StepKind::Deletion)
    }

    pub fn consumes_hypothesis(self) -> bool {
        !matches!(self, StepKind::Deletion)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentStep {
    pub kind: StepKind,
    #[serde(rename = "ref", with = "token_text")]
    pub ref_token: Option<Token>,
    #[serde(rename = "hyp", with = "token_text")]
    pub hyp_token: Option<Token>,
    #[serde(rename = "ref_node")]
    pub ref_node_id: Option<usize>,
}

/// Step tokens travel as their normalized text.
mod token_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::annotation::Token;

    pub fn serialize<S: Serializer>(token: &Option<Token>, serializer: S) -> Result<S::Ok, S::Error> {
        match token {
            Some(t) => serializer.serialize_some(&t.text),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Option<Token>, D::Error> {
        Ok(Option::<String>::deserialize(deserializer)?.map(Token::new))
    }
}

impl AlignmentStep {
    pub fn char_errors(&self, cost: &CostConfig) -> u32 {
        let reference = self.ref_token.as_ref().map(|t| t.text.as_str());
        let hypothesis = self.hyp_token.as_ref().map(|t| t.text.as_str());
        char_cost(reference, hypothesis, self.kind, cost.indel_char_cost)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub score: ScoreTuple,
    pub steps: Vec<AlignmentStep>,
    /// Traversed reference nodes from start to end sentinel, inclusive.
    pub ref_path: Vec<usize>,
}

impl Alignment {
    pub fn count(&self, kind: StepKind) -> usize {
        self.steps.iter().filter(|s| s.kind == kind).count()
    }

    pub fn hypothesis_tokens(&self) -> impl Iterator<Item = &Token> {
        self.steps.iter().filter_map(|s| s.hyp_token.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("hypothesis token {index} is a wildcard")]
    WildcardInHypothesis { index: usize },
    #[error("flat view has no start/end sentinels")]
    EmptyFlatView,
}

/// Character-level Levenshtein distance.
pub fn char_levenshtein(a: &str, b: &str) -> u32 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_with(&a, &b, &mut Vec::new())
}

/// Levenshtein distance reusing `row` as scratch space.
fn levenshtein_with(a: &[char], b: &[char], row: &mut Vec<u32>) -> u32 {
    row.clear();
    row.extend(0..=b.len() as u32);
    for (i, ca) in a.iter().enumerate() {
        let mut diagonal = row[0];
        row[0] = i as u32 + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitution = diagonal + u32::from(ca != cb);
            diagonal = row[j + 1];
            row[j + 1] = substitution.min(row[j] + 1).min(diagonal + 1);
        }
    }
    row[b.len()]
}

/// Character errors charged for one step.
pub fn char_cost(reference: Option<&str>, hypothesis: Option<&str>, kind: StepKind, indel: IndelCharCost) -> u32 {
    let length = |s: Option<&str>| s.map_or(0, |s| s.chars().count() as u32);
    match kind {
        StepKind::Correct | StepKind::WildcardAbsorbed => 0,
        StepKind::Replacement => char_levenshtein(reference.unwrap_or(""), hypothesis.unwrap_or("")),
        StepKind::Insertion => match indel {
            IndelCharCost::TokenLength => length(hypothesis),
            IndelCharCost::Zero => 0,
        },
        StepKind::Deletion => match indel {
            IndelCharCost::TokenLength => length(reference),
            IndelCharCost::Zero => 0,
        },
    }
}

// Backpointer packing: low 30 bits hold the predecessor node, high 2 bits
// the move that entered the cell.
const MOVE_SHIFT: u32 = 30;
const NODE_MASK: u32 = (1 << MOVE_SHIFT) - 1;
const MOVE_NONE: u32 = 0;
const MOVE_DIAGONAL: u32 = 1;
const MOVE_VERTICAL: u32 = 2;
const MOVE_HORIZONTAL: u32 = 3;

fn pack(mv: u32, node: usize) -> u32 {
    (mv << MOVE_SHIFT) | node as u32
}

/// Sentinel for unreachable cells.
const UNREACHABLE: ScoreTuple = ScoreTuple {
    word_errors: u32::MAX,
    correct_matches: 0,
    char_errors: u32::MAX,
};

/// Finds an alignment whose score is minimal under `cost` over every
/// start-to-end path of `flat` and every monotone matching of `hypothesis`.
///
/// When candidates tie on the full score, diagonal moves win over vertical,
/// vertical over horizontal, and a lower predecessor node wins after that.
pub fn align(flat: &FlatView, hypothesis: &[Token], cost: &CostConfig) -> Result<Alignment, AlignError> {
    if flat.len() < 2
        || !matches!(flat.nodes[0].kind, NodeKind::Start)
        || !matches!(flat.nodes[flat.end()].kind, NodeKind::End)
    {
        return Err(AlignError::EmptyFlatView);
    }
    if let Some(index) = hypothesis.iter().position(Token::is_wildcard) {
        return Err(AlignError::WildcardInHypothesis { index });
    }
    assert!(flat.len() <= NODE_MASK as usize, "flat view too large");

    let width = hypothesis.len() + 1;
    let end = flat.end();
    let indel = cost.indel_char_cost;
    let default_order = cost.is_default_order();
    let better = |a: &ScoreTuple, b: &ScoreTuple| -> bool {
        if default_order {
            a < b
        } else {
            cost.compare(a, b) == Ordering::Less
        }
    };

    let hyp_len: Vec<u32> = hypothesis.iter().map(|t| t.char_len() as u32).collect();
    // Replacement distances are memoized per distinct hypothesis word
    // within each reference row.
    let mut distinct: HashMap<&str, usize> = HashMap::new();
    let hyp_word: Vec<usize> = hypothesis
        .iter()
        .map(|t| {
            let next = distinct.len();
            *distinct.entry(t.text.as_str()).or_insert(next)
        })
        .collect();
    let mut word_chars: Vec<Vec<char>> = vec![Vec::new(); distinct.len()];
    for (text, &id) in &distinct {
        word_chars[id] = text.chars().collect();
    }
    let mut memo: Vec<u32> = vec![u32::MAX; word_chars.len()];
    let mut scratch = Vec::new();
    let insertion_cost: Vec<ScoreTuple> = hyp_len
        .iter()
        .map(|&len| ScoreTuple::new(1, 0, if indel == IndelCharCost::TokenLength { len } else { 0 }))
        .collect();

    // Score rows are freed once every successor has been filled.
    let last_use: Vec<usize> = flat
        .successors
        .iter()
        .map(|s| s.iter().copied().max().unwrap_or(0))
        .collect();
    let mut rows: Vec<Option<Vec<ScoreTuple>>> = vec![None; flat.len()];
    let mut back: Vec<u32> = vec![0; flat.len() * width];

    // Start row: only leading insertions.
    let mut start_row = vec![UNREACHABLE; width];
    start_row[0] = ScoreTuple::ZERO;
    for j in 1..width {
        start_row[j] = start_row[j - 1] + insertion_cost[j - 1];
        back[j] = pack(MOVE_HORIZONTAL, FlatView::START);
    }
    rows[FlatView::START] = Some(start_row);

    for v in 1..end {
        let node = &flat.nodes[v];
        let wildcard = node.is_wildcard();
        let token = node.token();
        let deletion_cost = match token {
            Some(t) => ScoreTuple::new(
                1,
                0,
                if indel == IndelCharCost::TokenLength {
                    t.char_len() as u32
                } else {
                    0
                },
            ),
            None => ScoreTuple::ZERO,
        };
        let mut row = vec![UNREACHABLE; width];
        let back_row = &mut back[v * width..(v + 1) * width];
        let ref_chars: Vec<char> = token.map_or_else(Vec::new, |t| t.text.chars().collect());
        memo.fill(u32::MAX);

        for j in 0..width {
            let mut best = UNREACHABLE;
            let mut best_back = MOVE_NONE;

            // Diagonal: consume node v and hypothesis token j-1.
            if j > 0 {
                if let Some(t) = token {
                    let hyp = &hypothesis[j - 1];
                    let step = if t.text == hyp.text {
                        ScoreTuple::new(0, 1, 0)
                    } else {
                        let word = hyp_word[j - 1];
                        if memo[word] == u32::MAX {
                            memo[word] = levenshtein_with(&ref_chars, &word_chars[word], &mut scratch);
                        }
                        ScoreTuple::new(1, 0, memo[word])
                    };
                    for &u in &flat.predecessors[v] {
                        let prev = rows[u].as_ref().expect("predecessor row")[j - 1];
                        if prev.word_errors == u32::MAX {
                            continue;
                        }
                        let candidate = prev + step;
                        if best_back == MOVE_NONE || better(&candidate, &best) {
                            best = candidate;
                            best_back = pack(MOVE_DIAGONAL, u);
                        }
                    }
                }
            }

            // Vertical: consume node v only.
            for &u in &flat.predecessors[v] {
                let prev = rows[u].as_ref().expect("predecessor row")[j];
                if prev.word_errors == u32::MAX {
                    continue;
                }
                let candidate = prev + deletion_cost;
                if best_back == MOVE_NONE || better(&candidate, &best) {
                    best = candidate;
                    best_back = pack(MOVE_VERTICAL, u);
                }
            }

            // Horizontal: stay on v, consume hypothesis token j-1.
            if j > 0 && row[j - 1].word_errors != u32::MAX {
                let step = if wildcard {
                    ScoreTuple::ZERO
                } else {
                    insertion_cost[j - 1]
                };
                let candidate = row[j - 1] + step;
                if best_back == MOVE_NONE || better(&candidate, &best) {
                    best = candidate;
                    best_back = pack(MOVE_HORIZONTAL, v);
                }
            }

            row[j] = best;
            back_row[j] = best_back;
        }
        rows[v] = Some(row);

        for &u in &flat.predecessors[v] {
            if last_use[u] == v {
                rows[u] = None;
            }
        }
    }

    // Entering the end sentinel is free and requires the full hypothesis.
    let last = width - 1;
    let mut final_score = UNREACHABLE;
    let mut final_node = None;
    for &u in &flat.predecessors[end] {
        let score = rows[u].as_ref().expect("predecessor row")[last];
        if score.word_errors == u32::MAX {
            continue;
        }
        if final_node.is_none() || better(&score, &final_score) {
            final_score = score;
            final_node = Some(u);
        }
    }
    let final_node = final_node.ok_or(AlignError::EmptyFlatView)?;

    let mut steps = Vec::new();
    let mut path = vec![end];
    let (mut v, mut j) = (final_node, last);
    while !(v == FlatView::START && j == 0) {
        let packed = back[v * width + j];
        let mv = packed >> MOVE_SHIFT;
        let from = (packed & NODE_MASK) as usize;
        let node = &flat.nodes[v];
        match mv {
            MOVE_DIAGONAL => {
                let reference = node.token().cloned();
                let hyp = hypothesis[j - 1].clone();
                let kind = if reference.as_ref().is_some_and(|r| r.text == hyp.text) {
                    StepKind::Correct
                } else {
                    StepKind::Replacement
                };
                steps.push(AlignmentStep {
                    kind,
                    ref_token: reference,
                    hyp_token: Some(hyp),
                    ref_node_id: Some(v),
                });
                path.push(v);
                j -= 1;
            }
            MOVE_VERTICAL => {
                if let Some(t) = node.token() {
                    steps.push(AlignmentStep {
                        kind: StepKind::Deletion,
                        ref_token: Some(t.clone()),
                        hyp_token: None,
                        ref_node_id: Some(v),
                    });
                }
                path.push(v);
            }
            MOVE_HORIZONTAL => {
                let absorbed = node.is_wildcard();
                steps.push(AlignmentStep {
                    kind: if absorbed {
                        StepKind::WildcardAbsorbed
                    } else {
                        StepKind::Insertion
                    },
                    ref_token: None,
                    hyp_token: Some(hypothesis[j - 1].clone()),
                    ref_node_id: absorbed.then_some(v),
                });
                j -= 1;
            }
            _ => unreachable!("cell ({v}, {j}) has no backpointer"),
        }
        v = from;
    }
    path.push(FlatView::START);
    path.reverse();
    steps.reverse();
    // A horizontal run re-pushes nothing, but consecutive vertical/diagonal
    // moves never revisit a node, so the path is already deduplicated.
    path.dedup();

    Ok(Alignment {
        score: final_score,
        steps,
        ref_path: path,
    })
}

/// Splits tokens into single-character tokens, dropping word boundaries.
pub fn explode_chars(tokens: &[Token]) -> Vec<Token> {
    tokens
        .iter()
        .flat_map(|t| t.text.chars().map(|c| Token::new(c.to_string())))
        .collect()
}

/// Character-level alignment: the same fill, with every token expanded
/// into character nodes and the hypothesis split into characters.
pub fn align_chars(flat: &FlatView, hypothesis: &[Token], cost: &CostConfig) -> Result<Alignment, AlignError> {
    if let Some(index) = hypothesis.iter().position(Token::is_wildcard) {
        return Err(AlignError::WildcardInHypothesis { index });
    }
    align(&flat.to_char_level(), &explode_chars(hypothesis), cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{parse_annotation, tokenize, TokenizerConfig};

    fn parse(text: &str) -> Annotation {
        parse_annotation(text, &TokenizerConfig::default()).unwrap()
    }

    fn hyp(text: &str) -> Vec<Token> {
        tokenize(text, &TokenizerConfig::default())
    }

    fn run(reference: &str, hypothesis: &str) -> Alignment {
        align(&flatten(&parse(reference)), &hyp(hypothesis), &CostConfig::default()).unwrap()
    }

    fn kinds(alignment: &Alignment) -> Vec<StepKind> {
        alignment.steps.iter().map(|s| s.kind).collect()
    }

    #[test]
    fn flat_view_jump_edges() {
        let flat = flatten(&parse("{A|B} {C} D"));
        assert_eq!(flat.len(), 6);
        let [a, b, c, d] = ["a", "b", "c", "d"].map(|t| flat.find(t).unwrap());
        let end = flat.end();
        assert_eq!(flat.successors[FlatView::START], vec![a, b]);
        assert_eq!(flat.successors[a], vec![c, d]);
        assert_eq!(flat.successors[b], vec![c, d]);
        assert_eq!(flat.successors[c], vec![d]);
        assert_eq!(flat.successors[d], vec![end]);
    }

    #[test]
    fn flat_view_single_token() {
        let flat = flatten(&parse("hello"));
        assert_eq!(flat.successors, vec![vec![1], vec![2], vec![]]);
    }

    #[test]
    fn flat_view_wildcard_skip() {
        let flat = flatten(&parse("<*>"));
        assert_eq!(flat.len(), 3);
        assert!(flat.nodes[1].is_wildcard());
        assert_eq!(flat.successors[0], vec![1, 2]);
        assert_eq!(flat.successors[1], vec![2]);
    }

    #[test]
    fn adjacent_wildcards_merge() {
        let flat = flatten(&parse("a <*> <*> b"));
        assert_eq!(flat.nodes.iter().filter(|n| n.is_wildcard()).count(), 1);
        let flat = flatten(&parse("a <*> {} <*> b"));
        assert_eq!(flat.nodes.iter().filter(|n| n.is_wildcard()).count(), 2);
    }

    #[test]
    fn multi_token_options_do_not_cross() {
        let flat = flatten(&parse("{new york|ny} city"));
        let new = flat.find("new").unwrap();
        let york = flat.find("york").unwrap();
        let ny = flat.find("ny").unwrap();
        assert_eq!(flat.successors[new], vec![york]);
        assert!(!flat.has_edge(ny, york));
        assert_eq!(flat.nodes[york].membership, Some(OptionRef { block: 0, option: 0 }));
        assert_eq!(flat.nodes[york].position, 1);
    }

    #[test]
    fn multivariant_prefers_close_spelling() {
        let alignment = run("multivariate though", "multivariant");
        assert_eq!(kinds(&alignment), [StepKind::Replacement, StepKind::Deletion]);
        assert_eq!(alignment.steps[0].ref_token.as_ref().unwrap().text, "multivariate");
        assert_eq!(alignment.steps[1].ref_token.as_ref().unwrap().text, "though");
        assert_eq!(alignment.score.word_errors, 2);
    }

    #[test]
    fn identity() {
        let alignment = run("one two three", "one two three");
        assert_eq!(alignment.score, ScoreTuple::new(0, 3, 0));
        assert!(alignment.steps.iter().all(|s| s.kind == StepKind::Correct));
        assert_eq!(alignment.ref_path, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn wildcard_absorbs() {
        let alignment = run("a <*> b", "a x y z b");
        assert_eq!(
            kinds(&alignment),
            [
                StepKind::Correct,
                StepKind::WildcardAbsorbed,
                StepKind::WildcardAbsorbed,
                StepKind::WildcardAbsorbed,
                StepKind::Correct
            ]
        );
        assert_eq!(alignment.score, ScoreTuple::new(0, 2, 0));
        assert_eq!(alignment.steps[1].ref_node_id, Some(2));
    }

    #[test]
    fn block_option_choice() {
        let alignment = run("{one|1}", "1");
        assert_eq!(alignment.score, ScoreTuple::new(0, 1, 0));
        assert_eq!(kinds(&alignment), [StepKind::Correct]);
    }

    #[test]
    fn hello_hey_char_errors() {
        let alignment = run("hello", "hey");
        assert_eq!(alignment.score, ScoreTuple::new(1, 0, 3));
        assert_eq!(
            char_cost(
                Some("hello"),
                Some("hey"),
                StepKind::Replacement,
                IndelCharCost::TokenLength
            ),
            3
        );
        assert_eq!(
            char_cost(Some("abc"), None, StepKind::Deletion, IndelCharCost::TokenLength),
            3
        );
        assert_eq!(
            char_cost(Some("x"), Some("x"), StepKind::Correct, IndelCharCost::TokenLength),
            0
        );
        assert_eq!(
            char_cost(None, Some("abc"), StepKind::Insertion, IndelCharCost::Zero),
            0
        );
    }

    #[test]
    fn empty_hypothesis_and_empty_reference() {
        let alignment = run("a b", "");
        assert_eq!(kinds(&alignment), [StepKind::Deletion, StepKind::Deletion]);
        let flat = flatten(&Annotation::default());
        let alignment = align(&flat, &hyp("x y"), &CostConfig::default()).unwrap();
        assert_eq!(kinds(&alignment), [StepKind::Insertion, StepKind::Insertion]);
        assert_eq!(alignment.ref_path, vec![0, 1]);
    }

    #[test]
    fn wildcard_in_hypothesis_rejected() {
        let flat = flatten(&parse("a"));
        let err = align(&flat, &[Token::new("a"), Token::new("<*>")], &CostConfig::default());
        assert_eq!(err, Err(AlignError::WildcardInHypothesis { index: 1 }));
    }

    #[test]
    fn malformed_flat_view_rejected() {
        let flat = FlatView::from_edges(vec![FlatNode::sentinel(NodeKind::Start)], vec![]);
        assert_eq!(
            align(&flat, &[], &CostConfig::default()),
            Err(AlignError::EmptyFlatView)
        );
    }

    #[test]
    fn char_level() {
        let flat = flatten(&parse("ab"));
        let a = align_chars(&flat, &hyp("ab"), &CostConfig::default()).unwrap();
        assert_eq!(a.score, ScoreTuple::new(0, 2, 0));
        let a = align_chars(&flat, &hyp("ax"), &CostConfig::default()).unwrap();
        assert_eq!(kinds(&a), [StepKind::Correct, StepKind::Replacement]);
        let flat = flatten(&parse("{one|1}"));
        let a = align_chars(&flat, &hyp("one"), &CostConfig::default()).unwrap();
        assert_eq!(kinds(&a), [StepKind::Correct; 3]);
        let flat = flatten(&parse("a b"));
        let a = align_chars(&flat, &hyp("ab"), &CostConfig::default()).unwrap();
        assert_eq!(a.score.word_errors, 0);
    }

    #[test]
    fn tie_break_order_is_pluggable() {
        // Without tie-breaks the deterministic move order decides.
        let flat = flatten(&parse("multivariate though"));
        let cost = CostConfig::word_errors_only();
        let a = align(&flat, &hyp("multivariant"), &cost).unwrap();
        assert_eq!(a.score.word_errors, 2);

        let chars_first = CostConfig {
            tie_breaks: vec![TieBreak::CharErrors, TieBreak::CorrectMatches],
            ..CostConfig::default()
        };
        let a = align(&flat, &hyp("multivariant"), &chars_first).unwrap();
        assert_eq!(a.steps[0].kind, StepKind::Replacement);
        assert_eq!(a.steps[0].ref_token.as_ref().unwrap().text, "multivariate");
    }

    #[test]
    fn levenshtein_basics() {
        assert_eq!(char_levenshtein("", ""), 0);
        assert_eq!(char_levenshtein("kitten", "sitting"), 3);
        assert_eq!(char_levenshtein("ёж", "еж"), 1);
    }

    #[test]
    fn alignment_json_shape() {
        let value = serde_json::to_value(run("a", "b")).unwrap();
        assert_eq!(value["score"]["word_errors"], 1);
        assert_eq!(value["steps"][0]["kind"], "replacement");
        assert_eq!(value["steps"][0]["ref_node"], 1);
        assert_eq!(value["steps"][0]["ref"], "a");
        assert_eq!(value["steps"][0]["hyp"], "b");
    }
}
