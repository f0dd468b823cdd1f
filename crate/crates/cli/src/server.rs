//! `mwer serve`: static dashboard files plus a JSON API over a corpus file.
//!
//! - `GET  /api/corpus`: per-sample reports and disagreement scores
//! - `GET  /api/sample/{id}/multialign`
//! - `GET  /api/sample/{id}/streaming`
//! - `POST /api/sample/{id}/annotation` with `{"annotation": "..."}`: saves
//!   an edited annotation back to the corpus file, only if it parses
//!
//! Reads run concurrently; edits hold the write lock while the corpus file
//! is rewritten, so saves are serialized.

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mwer_core::annotation::{parse_annotation, Annotation, ParseError};
use mwer_core::corpus::{write_corpus, CorpusRecord};
use mwer_core::exec::Execution;
use mwer_core::metrics::{EvalConfig, MetricReport};
use mwer_core::multialign::{disagreement_report, multi_align, Disagreement, MultiAlignment};
use mwer_core::streaming::{HistogramConfig, PartialAlignmentRow, StreamingHistogram};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::CliError;
use crate::eval::load_corpus;
use crate::stream::{stream_eval, StreamOptions};

pub const CORPUS_FILE: &str = "corpus.jsonl";

#[derive(Clone, Debug)]
pub struct ServerConfig {
    /// Served as static files (the dashboard bundle and exported JSON).
    pub artifacts: PathBuf,
    pub corpus: PathBuf,
    pub eval: EvalConfig,
    pub rows: usize,
    pub histogram: HistogramConfig,
    /// Share of rows in error for a column to count as contested.
    pub disagreement_threshold: f64,
}

impl ServerConfig {
    pub fn new(artifacts: impl Into<PathBuf>) -> Self {
        let artifacts = artifacts.into();
        Self {
            corpus: artifacts.join(CORPUS_FILE),
            artifacts,
            eval: EvalConfig::default(),
            rows: 20,
            histogram: HistogramConfig::default(),
            disagreement_threshold: 0.5,
        }
    }
}

pub struct AppState {
    config: ServerConfig,
    records: RwLock<Vec<CorpusRecord>>,
}

impl AppState {
    pub fn load(config: ServerConfig) -> Result<Arc<Self>, CliError> {
        let records = load_corpus(&config.corpus)?;
        Ok(Arc::new(Self {
            config,
            records: RwLock::new(records),
        }))
    }

    fn record(&self, id: &str) -> Result<CorpusRecord, ApiError> {
        self.records
            .read()
            .expect("corpus lock")
            .iter()
            .find(|r| r.id == id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    pub offset: Option<usize>,
    pub snippet: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.into(),
                message: message.into(),
                offset: None,
                snippet: None,
            },
        }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", format!("unknown sample id {id:?}"))
    }

    fn parse(status: StatusCode, e: &ParseError) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: e.kind().into(),
                message: e.to_string(),
                offset: e.offset(),
                snippet: e.snippet().map(str::to_string),
            },
        }
    }

    fn unprocessable(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "Unprocessable", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleSummary {
    pub id: String,
    pub annotation: String,
    pub systems: BTreeMap<String, MetricReport>,
    pub max_disagreement: f64,
    pub has_streaming: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub samples: Vec<SampleSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleMultialign {
    pub id: String,
    pub multialign: MultiAlignment,
    pub disagreements: Vec<Disagreement>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleStreaming {
    pub id: String,
    pub recording_id: String,
    pub rows: Vec<PartialAlignmentRow>,
    pub histogram: StreamingHistogram,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnotationEdit {
    pub annotation: String,
}

fn align_record(
    config: &ServerConfig,
    record: &CorpusRecord,
    annotation: &Annotation,
) -> Result<MultiAlignment, ApiError> {
    let hypotheses: Vec<(String, String)> = record.hypotheses.clone().into_iter().collect();
    multi_align(annotation, &hypotheses, &config.eval, Execution::default()).map_err(ApiError::unprocessable)
}

fn sample_multialign(config: &ServerConfig, record: &CorpusRecord) -> Result<SampleMultialign, ApiError> {
    let annotation = parse_annotation(&record.annotation, &config.eval.tokenizer)
        .map_err(|e| ApiError::parse(StatusCode::UNPROCESSABLE_ENTITY, &e))?;
    let multialign = align_record(config, record, &annotation)?;
    let disagreements = disagreement_report(&multialign, config.disagreement_threshold);
    Ok(SampleMultialign {
        id: record.id.clone(),
        multialign,
        disagreements,
    })
}

fn summarize(config: &ServerConfig, record: &CorpusRecord) -> SampleSummary {
    let mut summary = SampleSummary {
        id: record.id.clone(),
        annotation: record.annotation.clone(),
        systems: BTreeMap::new(),
        max_disagreement: 0.0,
        has_streaming: record.timed_words.is_some() && record.session_history.is_some(),
        error: None,
    };
    let parsed = parse_annotation(&record.annotation, &config.eval.tokenizer);
    match parsed.map_err(|e| e.to_string()).and_then(|a| {
        let hypotheses: Vec<(String, String)> = record.hypotheses.clone().into_iter().collect();
        multi_align(&a, &hypotheses, &config.eval, Execution::Sequential).map_err(|e| e.to_string())
    }) {
        Ok(ma) => {
            summary.max_disagreement = disagreement_report(&ma, 0.0).first().map_or(0.0, |d| d.fraction);
            summary.systems = ma.rows.into_iter().map(|row| (row.name, row.report)).collect();
        }
        Err(e) => summary.error = Some(e),
    }
    summary
}

async fn get_corpus(State(state): State<Arc<AppState>>) -> Json<CorpusSummary> {
    let records = state.records.read().expect("corpus lock").clone();
    let samples = mwer_core::exec::map(&records, Execution::default(), |r| summarize(&state.config, r));
    Json(CorpusSummary { samples })
}

async fn get_multialign(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SampleMultialign>, ApiError> {
    let record = state.record(&id)?;
    sample_multialign(&state.config, &record).map(Json)
}

async fn get_streaming(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SampleStreaming>, ApiError> {
    let record = state.record(&id)?;
    let (Some(words), Some(history)) = (&record.timed_words, record.history()) else {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "NoStreamingData",
            format!("sample {id:?} has no timed words or session history"),
        ));
    };
    let options = StreamOptions {
        config: state.config.eval.clone(),
        annotation: record.annotation.clone(),
        rows: state.config.rows,
        histogram: state.config.histogram,
        ..Default::default()
    };
    let outcome = stream_eval(&history, words, &options).map_err(|e| match e {
        CliError::Parse { source, .. } => ApiError::parse(StatusCode::UNPROCESSABLE_ENTITY, &source),
        other => ApiError::unprocessable(other),
    })?;
    Ok(Json(SampleStreaming {
        id,
        recording_id: outcome.recording_id,
        rows: outcome.rows,
        histogram: outcome.histogram,
    }))
}

/// Writes through a sibling temporary file so readers of the corpus file
/// never see a partial write.
fn save_corpus(path: &Path, records: &[CorpusRecord]) -> std::io::Result<()> {
    let mut buffer = Vec::new();
    write_corpus(records, &mut buffer)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, buffer)?;
    fs::rename(&tmp, path)
}

async fn post_annotation(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(edit): Json<AnnotationEdit>,
) -> Result<Json<SampleMultialign>, ApiError> {
    let annotation = parse_annotation(&edit.annotation, &state.config.eval.tokenizer)
        .map_err(|e| ApiError::parse(StatusCode::BAD_REQUEST, &e))?;
    let updated = {
        let mut records = state.records.write().expect("corpus lock");
        let index = records
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| ApiError::not_found(&id))?;
        let mut next = records.clone();
        next[index].annotation = edit.annotation.clone();
        save_corpus(&state.config.corpus, &next)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "SaveFailed", e.to_string()))?;
        *records = next;
        records[index].clone()
    };
    let multialign = align_record(&state.config, &updated, &annotation)?;
    let disagreements = disagreement_report(&multialign, state.config.disagreement_threshold);
    Ok(Json(SampleMultialign {
        id,
        multialign,
        disagreements,
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    let files = ServeDir::new(&state.config.artifacts);
    Router::new()
        .route("/api/corpus", get(get_corpus))
        .route("/api/sample/{id}/multialign", get(get_multialign))
        .route("/api/sample/{id}/streaming", get(get_streaming))
        .route("/api/sample/{id}/annotation", post(post_annotation))
        .fallback_service(files)
        .with_state(state)
}

pub async fn cmd_serve(config: ServerConfig, port: u16) -> Result<(), CliError> {
    let state = AppState::load(config)?;
    let address = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(address)
        .await
        .map_err(CliError::io(format!("127.0.0.1:{port}")))?;
    eprintln!("serving on http://{address}");
    axum::serve(listener, router(state))
        .await
        .map_err(CliError::io(format!("127.0.0.1:{port}")))
}
