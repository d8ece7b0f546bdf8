//! HTTP service for interactive retrieval.
//!
//! Requests read an immutable [`Snapshot`] behind an `Arc`; reloading
//! builds a new snapshot off to the side and swaps the pointer, so in-flight
//! requests finish against the snapshot they started with.

pub mod api;
pub mod snapshot;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use storyline_core::eval::QueryMode;
use storyline_core::rankers::{QueryInput, RankError, System};
use storyline_core::Timestamp;

pub use self::api::*;
pub use self::snapshot::{ServeConfig, Snapshot};

#[derive(Default)]
pub struct AppState {
    current: RwLock<Option<Arc<Snapshot>>>,
    versions: AtomicU64,
}

impl AppState {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    /// Installs `snapshot` as the current one and returns its version.
    pub fn install(&self, mut snapshot: Snapshot) -> u64 {
        let version = self.versions.fetch_add(1, Ordering::SeqCst) + 1;
        snapshot.version = version;
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Some(Arc::new(snapshot));
        version
    }

    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn loading() -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "loading", "the index snapshot is still loading")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail { code: self.code.to_string(), message: self.message },
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        Self::bad_request("invalid_json", rejection.body_text())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/search", post(search))
        .route("/v1/articles/{id}", get(article))
        .route("/v1/health", get(health))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "no_such_endpoint", "unknown endpoint") })
        .with_state(state)
}

/// Validated form of a [`SearchRequest`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchPlan {
    pub input: QueryInput,
    pub mode: QueryMode,
    pub system: System,
    pub depth: usize,
}

pub fn plan_search(req: &SearchRequest, snapshot: &Snapshot, now: Timestamp) -> Result<SearchPlan, ApiError> {
    let mode = match req.mode.as_deref() {
        None => QueryMode::EC,
        Some(raw) => match raw.parse::<QueryMode>() {
            Ok(m @ (QueryMode::E | QueryMode::C | QueryMode::EC)) => m,
            _ => return Err(ApiError::bad_request("invalid_mode", format!("mode must be E, C or EC, got {raw:?}"))),
        },
    };
    let system = match req.system.as_deref() {
        None => snapshot.default_system,
        Some(raw) => raw.parse::<System>().map_err(|e| ApiError::bad_request("invalid_system", e))?,
    };
    if system.needs_semantic() && snapshot.semantic.is_none() {
        return Err(ApiError::bad_request(
            "system_unavailable",
            format!("system {system} needs a semantic ranker, which this service has not configured"),
        ));
    }
    if req.depth == 0 {
        return Err(ApiError::bad_request("invalid_depth", "depth must be at least 1"));
    }
    let timestamp = match req.timestamp.as_deref() {
        None => now,
        Some(raw) => raw
            .parse::<Timestamp>()
            .map_err(|e| ApiError::bad_request("invalid_timestamp", e.to_string()))?,
    };
    let event = req.event_text.trim();
    let context = req.context_text.trim();
    let (event_text, context_text) = match mode {
        QueryMode::E => (event, ""),
        QueryMode::C => ("", context),
        _ => (event, context),
    };
    if event_text.is_empty() && context_text.is_empty() {
        let need = match mode {
            QueryMode::E => "event_text",
            QueryMode::C => "context_text",
            _ => "event_text or context_text",
        };
        return Err(ApiError::bad_request("empty_query", format!("mode {mode} needs a nonempty {need}")));
    }
    Ok(SearchPlan {
        input: QueryInput {
            qid: "request".into(),
            event_text: event_text.to_string(),
            context_text: context_text.to_string(),
            timestamp,
            vector_key: None,
        },
        mode,
        system,
        depth: req.depth,
    })
}

/// Runs a validated plan; everything but `timing_ms` depends only on the
/// plan and the snapshot.
pub fn execute(plan: &SearchPlan, snapshot: &Snapshot) -> Result<SearchResponse, ApiError> {
    let start = Instant::now();
    let output = snapshot.pipeline().run(&plan.input, plan.system, plan.depth).map_err(|e| match e {
        RankError::External(_) => ApiError::new(StatusCode::BAD_GATEWAY, "scorer_failed", e.to_string()),
        other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
    })?;
    let mut results = Vec::with_capacity(output.ranked.len());
    for entry in &output.ranked.entries {
        let a = snapshot
            .corpus
            .get(&entry.article_id)
            .ok_or_else(|| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "ranked an unknown article"))?;
        let ranks = output
            .members
            .iter()
            .filter_map(|m| m.rank_of(&a.id).map(|r| (m.ranker.as_str().to_string(), r)))
            .collect();
        results.push(SearchResult {
            id: a.id.clone(),
            headline: a.headline.clone(),
            lead: a.lead_text(),
            published_at: a.published_at,
            score: entry.score.is_finite().then_some(entry.score),
            ranks,
        });
    }
    Ok(SearchResponse {
        system: plan.system.as_str().to_string(),
        mode: plan.mode.as_str().to_string(),
        timestamp: plan.input.timestamp,
        depth: plan.depth,
        results,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
        snapshot_version: snapshot.version,
    })
}

async fn search(
    State(state): State<Arc<AppState>>,
    body: Result<Json<SearchRequest>, JsonRejection>,
) -> Result<Json<SearchResponse>, ApiError> {
    let Json(req) = body?;
    let snapshot = state.snapshot().ok_or_else(ApiError::loading)?;
    let plan = plan_search(&req, &snapshot, Timestamp::now())?;
    // ranking is CPU-bound and the external scorer blocks on its socket
    tokio::task::spawn_blocking(move || execute(&plan, &snapshot))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map(Json)
}

async fn article(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<ArticleResponse>, ApiError> {
    let snapshot = state.snapshot().ok_or_else(ApiError::loading)?;
    let a = snapshot
        .corpus
        .get(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_article", format!("no article with id {id:?}")))?;
    Ok(Json(ArticleResponse {
        snapshot_version: snapshot.version,
        lead: a.lead_text(),
        article: a.clone(),
    }))
}

async fn health(State(state): State<Arc<AppState>>) -> (StatusCode, Json<HealthResponse>) {
    let version = env!("CARGO_PKG_VERSION").to_string();
    match state.snapshot() {
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(HealthResponse {
                status: "loading".into(),
                version,
                api: API_VERSION.into(),
                snapshot_version: None,
                articles: None,
                index: None,
                systems: vec![],
                default_system: None,
            }),
        ),
        Some(s) => (
            StatusCode::OK,
            Json(HealthResponse {
                status: "ok".into(),
                version,
                api: API_VERSION.into(),
                snapshot_version: Some(s.version),
                articles: Some(s.corpus.len()),
                index: Some(s.index.stats()),
                systems: s.systems().iter().map(|x| x.as_str().to_string()).collect(),
                default_system: Some(s.default_system.as_str().to_string()),
            }),
        ),
    }
}
