//! JSON Schemas (draft 2020-12) for every JSON document the toolkit emits
//! or reads, including the command-line outputs and server payloads.

pub const ALIGNMENT: &str = include_str!("../schemas/alignment.schema.json");
pub const METRIC_REPORT: &str = include_str!("../schemas/metric_report.schema.json");
pub const MULTIALIGN: &str = include_str!("../schemas/multialign.schema.json");
pub const DIAGRAM: &str = include_str!("../schemas/diagram.schema.json");
pub const HISTOGRAM: &str = include_str!("../schemas/histogram.schema.json");
pub const HISTORY_EVENT: &str = include_str!("../schemas/history_event.schema.json");
pub const CORPUS_RECORD: &str = include_str!("../schemas/corpus_record.schema.json");
pub const ALIGN_OUTPUT: &str = include_str!("../schemas/align_output.schema.json");
pub const SAMPLE_REPORT: &str = include_str!("../schemas/sample_report.schema.json");
pub const AGGREGATE: &str = include_str!("../schemas/aggregate.schema.json");
pub const CORPUS_SUMMARY: &str = include_str!("../schemas/corpus_summary.schema.json");
pub const SAMPLE_MULTIALIGN: &str = include_str!("../schemas/sample_multialign.schema.json");
pub const SAMPLE_STREAMING: &str = include_str!("../schemas/sample_streaming.schema.json");
pub const ERROR_RESPONSE: &str = include_str!("../schemas/error_response.schema.json");

/// `(name, schema)` pairs, e.g. for publishing alongside artifacts.
pub const ALL: &[(&str, &str)] = &[
    ("alignment", ALIGNMENT),
    ("metric_report", METRIC_REPORT),
    ("multialign", MULTIALIGN),
    ("diagram", DIAGRAM),
    ("histogram", HISTOGRAM),
    ("history_event", HISTORY_EVENT),
    ("corpus_record", CORPUS_RECORD),
    ("align_output", ALIGN_OUTPUT),
    ("sample_report", SAMPLE_REPORT),
    ("aggregate", AGGREGATE),
    ("corpus_summary", CORPUS_SUMMARY),
    ("sample_multialign", SAMPLE_MULTIALIGN),
    ("sample_streaming", SAMPLE_STREAMING),
    ("error_response", ERROR_RESPONSE),
];
