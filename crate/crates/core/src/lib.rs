//! Multi-reference speech recognition evaluation.
//!
//! - [`annotation`]: the `{a|b}` / `<*>` / `~` annotation grammar and tokenizer
//! - [`align`]: flat-view DAG alignment with lexicographic score tuples
//! - [`metrics`]: WER/CER, relaxed insertion penalty, corpus aggregation
//! - [`multialign`]: several hypotheses against one reference spine
//! - [`streaming`]: streaming session harness, time remapping, diagrams
//! - [`corpus`]: JSONL corpus records
//! - [`schemas`]: JSON Schemas for emitted documents

pub mod align;
pub mod annotation;
pub mod corpus;
pub mod exec;
pub mod metrics;
pub mod multialign;
pub mod schemas;
pub mod streaming;
