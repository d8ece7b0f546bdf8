//! Wire types of the HTTP API, version 1. The JSON Schemas under
//! `docs/schemas/` describe the same shapes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use storyline_core::index::IndexStats;
use storyline_core::{Article, Timestamp};

pub const API_VERSION: &str = "v1";
pub const DEFAULT_SEARCH_DEPTH: usize = 20;

fn default_depth() -> usize {
    DEFAULT_SEARCH_DEPTH
}

/// Body of `POST /v1/search`. `mode` and `system` stay strings here so that
/// bad values produce a reasoned 400 instead of a generic decode failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    #[serde(default)]
    pub event_text: String,
    #[serde(default)]
    pub context_text: String,
    /// RFC 3339 or `YYYY-MM-DD`; the current time when absent.
    #[serde(default)]
    pub timestamp: Option<String>,
    /// `E`, `C` or `EC` (case-insensitive); `EC` when absent.
    #[serde(default)]
    pub mode: Option<String>,
    /// The snapshot's default system (normally `rrf`) when absent.
    #[serde(default)]
    pub system: Option<String>,
    #[serde(default = "default_depth")]
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub id: String,
    pub headline: String,
    pub lead: String,
    pub published_at: Timestamp,
    /// Final score of the selected system; `null` when not finite (a
    /// semantic-only ranking of an article without a vector).
    pub score: Option<f64>,
    /// 1-based rank of this article in each member ranking.
    pub ranks: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub system: String,
    pub mode: String,
    pub timestamp: Timestamp,
    pub depth: usize,
    pub results: Vec<SearchResult>,
    pub timing_ms: f64,
    pub snapshot_version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleResponse {
    pub snapshot_version: u64,
    pub lead: String,
    pub article: Article,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    /// `ok`, or `loading` before the first snapshot is in place.
    pub status: String,
    pub version: String,
    pub api: String,
    pub snapshot_version: Option<u64>,
    pub articles: Option<usize>,
    pub index: Option<IndexStats>,
    pub systems: Vec<String>,
    pub default_system: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    /// Stable machine-readable reason, e.g. `invalid_mode`.
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}
