//! Multi-reference annotation grammar.
//!
//! ```text
//! annotation := segment*
//! segment    := wildcard | block | word
//! wildcard   := "<*>"
//! block      := "{" option ("|" option)* "}"
//! option     := "~"? text-without-{}|
//! ```
//!
//! A block with a single non-empty option gets an implicit empty option, so
//! `{well}` reads as `{well|}` while `{one|1}` stays a two-way choice. A
//! leading `~` marks an option as a spelling variant that strict evaluation
//! ignores.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const WILDCARD: &str = "<*>";

/// A single alignment element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    /// Normalized form used for comparison.
    pub text: String,
    /// Surface form as written in the source.
    pub original: String,
}

impl Token {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            original: text.clone(),
            text,
        }
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn is_wildcard(&self) -> bool {
        self.text == WILDCARD
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// One alternative of a multi-reference block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockOption {
    pub tokens: Vec<Token>,
    /// Set by a leading `~`: acceptable only in permissive evaluation.
    pub strict_violation: bool,
}

impl BlockOption {
    pub fn new(tokens: Vec<Token>, strict_violation: bool) -> Self {
        // An empty option never carries the flag.
        let strict_violation = strict_violation && !tokens.is_empty();
        Self {
            tokens,
            strict_violation,
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), false)
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Segment {
    Plain { token: Token },
    Block { options: Vec<BlockOption> },
    Wildcard,
}

impl Segment {
    pub fn plain(text: impl Into<String>) -> Self {
        Segment::Plain {
            token: Token::new(text),
        }
    }
}

/// Parsed annotation. Equality compares segments only; `source_text` is
/// carried for diagnostics.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Annotation {
    pub segments: Vec<Segment>,
    pub source_text: String,
}

impl PartialEq for Annotation {
    fn eq(&self, other: &Self) -> bool {
        self.segments == other.segments
    }
}

impl Eq for Annotation {}

impl Annotation {
    pub fn from_segments(segments: Vec<Segment>) -> Self {
        let mut annotation = Self {
            segments,
            source_text: String::new(),
        };
        annotation.source_text = serialize(&annotation);
        annotation
    }

    pub fn has_wildcard(&self) -> bool {
        self.segments.iter().any(|s| matches!(s, Segment::Wildcard))
    }

    /// Tokens along the canonical path: plain tokens plus the first option
    /// of every block, wildcards skipped.
    pub fn canonical_tokens(&self) -> Vec<&Token> {
        let mut out = Vec::new();
        for segment in &self.segments {
            match segment {
                Segment::Plain { token } => out.push(token),
                Segment::Block { options } => {
                    if let Some(first) = options.first() {
                        out.extend(first.tokens.iter());
                    }
                }
                Segment::Wildcard => {}
            }
        }
        out
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// Characters trimmed from both ends of every whitespace-separated
    /// fragment. Characters inside a word are kept.
    pub punctuation_strip_set: BTreeSet<char>,
}

pub const DEFAULT_PUNCTUATION: &str = ".,!?;:\"«»()[]…{}|";

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            punctuation_strip_set: DEFAULT_PUNCTUATION.chars().collect(),
        }
    }
}

impl TokenizerConfig {
    pub fn with_strip_set(mut self, chars: &str) -> Self {
        self.punctuation_strip_set = chars.chars().collect();
        self
    }

    fn normalize(&self, fragment: &str) -> Option<String> {
        let trimmed = fragment.trim_matches(|c: char| self.punctuation_strip_set.contains(&c));
        if trimmed.is_empty() {
            return None;
        }
        Some(if self.lowercase {
            trimmed.to_lowercase()
        } else {
            trimmed.to_string()
        })
    }
}

/// Splits on Unicode whitespace, trims punctuation from fragment edges and
/// optionally lowercases. Fragments that were pure punctuation are dropped.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<Token> {
    text.split_whitespace()
        .filter_map(|fragment| {
            config.normalize(fragment).map(|text| Token {
                text,
                original: fragment.to_string(),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Strict,
    #[default]
    Permissive,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Strict => "strict",
            Mode::Permissive => "permissive",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Mode::Strict),
            "permissive" => Ok(Mode::Permissive),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unbalanced brace at byte {offset}: `{snippet}`")]
    UnbalancedBrace { offset: usize, snippet: String },
    #[error("nested block at byte {offset}: `{snippet}`")]
    NestedBlock { offset: usize, snippet: String },
    #[error("wildcard inside block at byte {offset}: `{snippet}`")]
    WildcardInsideBlock { offset: usize, snippet: String },
    #[error("annotation is empty")]
    EmptyAnnotation,
}

impl ParseError {
    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::UnbalancedBrace { .. } => "UnbalancedBrace",
            ParseError::NestedBlock { .. } => "NestedBlock",
            ParseError::WildcardInsideBlock { .. } => "WildcardInsideBlock",
            ParseError::EmptyAnnotation => "EmptyAnnotation",
        }
    }

    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::UnbalancedBrace { offset, .. }
            | ParseError::NestedBlock { offset, .. }
            | ParseError::WildcardInsideBlock { offset, .. } => Some(*offset),
            ParseError::EmptyAnnotation => None,
        }
    }

    /// Source text starting at the offending position.
    pub fn snippet(&self) -> Option<&str> {
        match self {
            ParseError::UnbalancedBrace { snippet, .. }
            | ParseError::NestedBlock { snippet, .. }
            | ParseError::WildcardInsideBlock { snippet, .. } => Some(snippet),
            ParseError::EmptyAnnotation => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModeError {
    #[error("block at segment {segment} has no options left in strict mode")]
    BlockEmptiedByStrictMode { segment: usize },
}

fn snippet(text: &str, offset: usize) -> String {
    text[offset..].chars().take(16).collect()
}

pub fn parse_annotation(text: &str, config: &TokenizerConfig) -> Result<Annotation, ParseError> {
    let mut segments = Vec::new();
    let mut plain_start = 0;
    let mut cursor = 0;
    let bytes = text.as_bytes();

    let flush_plain = |segments: &mut Vec<Segment>, from: usize, to: usize| {
        segments.extend(
            tokenize(&text[from..to], config)
                .into_iter()
                .map(|token| Segment::Plain { token }),
        );
    };

    while cursor < bytes.len() {
        match bytes[cursor] {
            b'{' => {
                flush_plain(&mut segments, plain_start, cursor);
                let (options, next) = parse_block(text, cursor, config)?;
                segments.push(Segment::Block { options });
                cursor = next;
                plain_start = cursor;
            }
            b'}' => {
                return Err(ParseError::UnbalancedBrace {
                    offset: cursor,
                    snippet: snippet(text, cursor),
                })
            }
            b'<' if text[cursor..].starts_with(WILDCARD) => {
                flush_plain(&mut segments, plain_start, cursor);
                segments.push(Segment::Wildcard);
                cursor += WILDCARD.len();
                plain_start = cursor;
            }
            _ => cursor += 1,
        }
    }
    flush_plain(&mut segments, plain_start, text.len());

    if segments.is_empty() {
        return Err(ParseError::EmptyAnnotation);
    }
    Ok(Annotation {
        segments,
        source_text: text.to_string(),
    })
}

/// Parses a block starting at the `{` at `open`; returns options and the
/// offset just past the closing `}`.
fn parse_block(text: &str, open: usize, config: &TokenizerConfig) -> Result<(Vec<BlockOption>, usize), ParseError> {
    let bytes = text.as_bytes();
    let mut raw_options = Vec::new();
    let mut option_start = open + 1;
    let mut cursor = open + 1;
    loop {
        let Some(&byte) = bytes.get(cursor) else {
            return Err(ParseError::UnbalancedBrace {
                offset: open,
                snippet: snippet(text, open),
            });
        };
        match byte {
            b'{' => {
                return Err(ParseError::NestedBlock {
                    offset: cursor,
                    snippet: snippet(text, cursor),
                })
            }
            b'<' if text[cursor..].starts_with(WILDCARD) => {
                return Err(ParseError::WildcardInsideBlock {
                    offset: cursor,
                    snippet: snippet(text, cursor),
                })
            }
            b'|' => {
                raw_options.push(&text[option_start..cursor]);
                option_start = cursor + 1;
            }
            b'}' => {
                raw_options.push(&text[option_start..cursor]);
                break;
            }
            _ => {}
        }
        cursor += 1;
    }

    let mut options: Vec<BlockOption> = Vec::with_capacity(raw_options.len() + 1);
    for raw in raw_options {
        let raw = raw.trim_start();
        let (body, flagged) = match raw.strip_prefix('~') {
            Some(rest) => (rest, true),
            None => (raw, false),
        };
        let option = BlockOption::new(tokenize(body, config), flagged);
        // At most one empty option per block.
        if option.is_empty() && options.iter().any(BlockOption::is_empty) {
            continue;
        }
        options.push(option);
    }
    if options.len() == 1 && !options[0].is_empty() {
        options.push(BlockOption::empty());
    }
    Ok((options, cursor + 1))
}

fn serialize_tokens(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.original.as_str()).collect::<Vec<_>>().join(" ")
}

/// Canonical text form; `parse_annotation(&serialize(a))` reproduces any
/// parsed annotation.
pub fn serialize(annotation: &Annotation) -> String {
    annotation
        .segments
        .iter()
        .map(|segment| match segment {
            Segment::Plain { token } => token.original.clone(),
            Segment::Wildcard => WILDCARD.to_string(),
            Segment::Block { options } => {
                let body = options
                    .iter()
                    .map(|option| {
                        let tokens = serialize_tokens(&option.tokens);
                        if option.strict_violation {
                            format!("~{tokens}")
                        } else {
                            tokens
                        }
                    })
                    .collect::<Vec<_>>()
                    .join("|");
                format!("{{{body}}}")
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Strict mode drops tilde-flagged options; permissive mode is the identity.
/// Runs on a parsed AST, so implicit empty options are already present.
pub fn apply_mode(annotation: &Annotation, mode: Mode) -> Result<Annotation, ModeError> {
    if mode == Mode::Permissive {
        return Ok(annotation.clone());
    }
    let mut segments = Vec::with_capacity(annotation.segments.len());
    for (index, segment) in annotation.segments.iter().enumerate() {
        segments.push(match segment {
            Segment::Block { options } => {
                let kept: Vec<BlockOption> = options.iter().filter(|o| !o.strict_violation).cloned().collect();
                if kept.is_empty() {
                    return Err(ModeError::BlockEmptiedByStrictMode { segment: index });
                }
                Segment::Block { options: kept }
            }
            other => other.clone(),
        });
    }
    Ok(Annotation {
        segments,
        source_text: annotation.source_text.clone(),
    })
}

/// Indices of the options a block keeps under `mode`, in order.
pub fn kept_option_indices(options: &[BlockOption], mode: Mode) -> Vec<usize> {
    options
        .iter()
        .enumerate()
        .filter(|(_, o)| mode == Mode::Permissive || !o.strict_violation)
        .map(|(i, _)| i)
        .collect()
}
