use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use storyline_cli::service::{router, AppState, ServeConfig, Snapshot};
use storyline_core::corpus::{Corpus, IngestOptions};
use storyline_core::rankers::{QueryInput, RankError, SemanticScorer, System};
use storyline_core::synth::{generate, SynthConfig};
use storyline_core::{Bm25Params, Index, RankedList, RankerId, Scored, Timestamp};
use tower::ServiceExt;

fn repo(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(path)
}

fn schema(name: &str) -> jsonschema::Validator {
    let raw: Value = serde_json::from_reader(File::open(repo(&format!("docs/schemas/{name}.v1.json"))).unwrap()).unwrap();
    jsonschema::validator_for(&raw).unwrap()
}

fn assert_valid(name: &str, body: &Value) {
    let v = schema(name);
    let errors: Vec<String> = v.iter_errors(body).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name} schema violations {errors:?} in {body}");
}

/// Ranks candidates by descending id, enough to exercise fused output.
struct ReverseId;

impl SemanticScorer for ReverseId {
    fn rerank(&self, query: &QueryInput, candidates: &RankedList, _: &Corpus) -> Result<RankedList, RankError> {
        let mut ids: Vec<&str> = candidates.ids().collect();
        ids.sort_unstable_by(|a, b| b.cmp(a));
        let n = ids.len();
        let entries = ids.into_iter().enumerate().map(|(i, id)| Scored::new(id, (n - i) as f64)).collect();
        Ok(RankedList::new(query.qid.clone(), RankerId::Semantic, entries))
    }
}

fn fixture_corpus() -> Corpus {
    let f = File::open(repo("fixtures/golden_corpus.jsonl")).unwrap();
    Corpus::ingest(BufReader::new(f), IngestOptions::default()).unwrap().0
}

fn snapshot_of(corpus: Corpus, semantic: bool) -> Snapshot {
    let index = Index::build(&corpus, Bm25Params::default()).unwrap();
    let mut cfg = ServeConfig::minimal("unused");
    if !semantic {
        cfg.default_system = System::Bm25;
    }
    let scorer: Option<Box<dyn SemanticScorer>> = semantic.then(|| Box::new(ReverseId) as Box<dyn SemanticScorer>);
    Snapshot::from_parts(corpus, index, scorer, &cfg).unwrap()
}

fn app_with(snapshot: Snapshot) -> (Arc<AppState>, Router) {
    let state = AppState::new();
    state.install(snapshot);
    (state.clone(), router(state))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => builder.header("content-type", "application/json").body(Body::from(b.to_string())).unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn search(app: &Router, body: Value) -> (StatusCode, Value) {
    call(app, "POST", "/v1/search", Some(body)).await
}

fn golden_draft() -> Value {
    let corpus = fixture_corpus();
    let source = corpus.get("malta-storms-merchant-ship").unwrap();
    json!({
        "event_text": format!("{} {}", source.headline, source.lead_text()),
        "context_text": source.paragraphs[1][0],
        "timestamp": "2019-03-28T00:00:00Z",
    })
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing_ms");
    v
}

#[tokio::test]
async fn loading_state_answers_503() {
    let app = router(AppState::new());
    let (status, body) = search(&app, golden_draft()).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(body["error"]["code"], "loading");
    assert_valid("error", &body);
    let (status, body) = call(&app, "GET", "/v1/articles/x", None).await;
    assert_eq!((status, body["error"]["code"].as_str()), (StatusCode::SERVICE_UNAVAILABLE, Some("loading")));
    let (status, body) = call(&app, "GET", "/v1/health", None).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(body["status"], "loading");
    assert_valid("health-response", &body);
}

#[tokio::test]
async fn golden_draft_surfaces_the_linked_article() {
    let (_, app) = app_with(snapshot_of(fixture_corpus(), true));
    let (status, body) = search(&app, golden_draft()).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_valid("search-response", &body);
    assert_eq!(body["system"], "rrf");
    assert_eq!(body["mode"], "ec");
    assert_eq!(body["depth"], 20);
    let results = body["results"].as_array().unwrap();
    // the source article itself is not older than the draft, so d* is the only candidate
    assert_eq!(results.len(), 1);
    let top = &results[0];
    assert_eq!(top["id"], "italy-rejects-rescue-ship");
    assert_eq!(top["published_at"], "2018-06-11T00:00:00Z");
    assert_eq!(top["ranks"], json!({"bm25": 1, "semantic": 1, "recency": 1}));
    assert_eq!(top["score"].as_f64().unwrap(), 3.0 / 61.0);
}

#[tokio::test]
async fn timestamp_before_the_oldest_article_gives_empty_results() {
    let (_, app) = app_with(snapshot_of(fixture_corpus(), true));
    let mut draft = golden_draft();
    draft["timestamp"] = json!("2000-01-01");
    let (status, body) = search(&app, draft).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["results"], json!([]));
    assert_valid("search-response", &body);
}

#[tokio::test]
async fn default_timestamp_is_now() {
    let (_, app) = app_with(snapshot_of(fixture_corpus(), false));
    let before = Timestamp::now();
    let (status, body) = search(&app, json!({"event_text": "Italy rescue ship"})).await;
    assert_eq!(status, StatusCode::OK);
    let ts: Timestamp = body["timestamp"].as_str().unwrap().parse().unwrap();
    assert!(ts >= before && ts.as_secs() - before.as_secs() < 60);
    // both fixture articles are in the past now
    assert_eq!(body["results"].as_array().unwrap().len(), 2);
    assert_eq!(body["system"], "bm25");
}

#[tokio::test]
async fn article_by_id_round_trips() {
    let corpus = fixture_corpus();
    let want = corpus.get("italy-rejects-rescue-ship").unwrap().clone();
    let (_, app) = app_with(snapshot_of(corpus, true));
    let (status, body) = call(&app, "GET", "/v1/articles/italy-rejects-rescue-ship", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_valid("article-response", &body);
    assert_eq!(body["article"]["headline"], want.headline);
    assert_eq!(body["lead"], want.lead_text());
    assert_eq!(serde_json::from_value::<storyline_core::Article>(body["article"].clone()).unwrap(), want);

    let (status, body) = call(&app, "GET", "/v1/articles/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "unknown_article");
    assert_valid("error", &body);
}

#[tokio::test]
async fn invalid_requests_name_their_reason() {
    let (_, app) = app_with(snapshot_of(fixture_corpus(), true));
    let cases = [
        (json!({"event_text": "x", "depth": 0}), "invalid_depth"),
        (json!({"event_text": "x", "mode": "LS"}), "invalid_mode"),
        (json!({"event_text": "x", "mode": "both"}), "invalid_mode"),
        (json!({"event_text": "x", "system": "bert"}), "invalid_system"),
        (json!({"event_text": "x", "timestamp": "yesterday"}), "invalid_timestamp"),
        (json!({"event_text": "x", "mode": "C"}), "empty_query"),
        (json!({"context_text": "y", "mode": "E"}), "empty_query"),
        (json!({"event_text": "  ", "context_text": ""}), "empty_query"),
        (json!({"event_text": "x", "limit": 5}), "invalid_json"),
        (json!({"event_text": 3}), "invalid_json"),
    ];
    for (body, code) in cases {
        let (status, reply) = search(&app, body.clone()).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert_eq!(reply["error"]["code"], code, "{body}");
        assert_valid("error", &reply);
    }
    let req = Request::builder()
        .method("POST")
        .uri("/v1/search")
        .header("content-type", "application/json")
        .body(Body::from("{not json"))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
    let (status, body) = call(&app, "GET", "/v2/search", None).await;
    assert_eq!((status, body["error"]["code"].as_str()), (StatusCode::NOT_FOUND, Some("no_such_endpoint")));
}

#[tokio::test]
async fn semantic_systems_need_a_scorer() {
    let (_, app) = app_with(snapshot_of(fixture_corpus(), false));
    for system in ["semantic", "rrf-recency", "rrf"] {
        let (status, body) = search(&app, json!({"event_text": "Italy", "system": system})).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert_eq!(body["error"]["code"], "system_unavailable");
    }
    let (_, body) = call(&app, "GET", "/v1/health", None).await;
    assert_eq!(body["systems"], json!(["bm25", "recency"]));
}

#[tokio::test]
async fn mode_selects_query_text_case_insensitively() {
    let (_, app) = app_with(snapshot_of(fixture_corpus(), true));
    let mut draft = golden_draft();
    draft["system"] = json!("bm25");
    for (mode, want) in [("e", "e"), ("C", "c"), ("Ec", "ec")] {
        draft["mode"] = json!(mode);
        let (status, body) = search(&app, draft.clone()).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["mode"], want);
        assert_eq!(body["results"][0]["id"], "italy-rejects-rescue-ship");
    }
}

#[tokio::test]
async fn depth_bounds_results_and_dates_precede_the_query() {
    let bench = generate(&SynthConfig { storylines: 8, ..SynthConfig::default() });
    let headlines: Vec<String> = bench.corpus.articles().iter().take(30).map(|a| a.headline.clone()).collect();
    let (_, app) = app_with(snapshot_of(bench.corpus, true));
    let mut req = json!({"event_text": headlines.join(" "), "timestamp": "2017-01-01"});
    for system in ["bm25", "recency", "semantic", "rrf-recency", "rrf"] {
        req["system"] = json!(system);
        let (status, body) = search(&app, req.clone()).await;
        assert_eq!(status, StatusCode::OK);
        assert_valid("search-response", &body);
        let results = body["results"].as_array().unwrap();
        assert_eq!(results.len(), 20, "{system}");
        let cutoff = Timestamp::parse("2017-01-01").unwrap();
        for r in results {
            assert!(r["published_at"].as_str().unwrap().parse::<Timestamp>().unwrap() < cutoff);
            let members: Vec<&str> = r["ranks"].as_object().unwrap().keys().map(String::as_str).collect();
            assert_eq!(members.len(), System::ALL.iter().find(|s| s.as_str() == system).unwrap().members().len());
        }
    }
    req["depth"] = json!(3);
    let (_, body) = search(&app, req).await;
    assert_eq!(body["results"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn identical_requests_agree_until_the_snapshot_swaps() {
    let (state, app) = app_with(snapshot_of(fixture_corpus(), true));
    let (_, first) = search(&app, golden_draft()).await;
    let (_, second) = search(&app, golden_draft()).await;
    assert_eq!(without_timing(first.clone()), without_timing(second));
    assert_eq!(first["snapshot_version"], 1);

    // swap in a corpus without the relevant article
    let mut articles = fixture_corpus().articles().to_vec();
    articles.retain(|a| a.id != "italy-rejects-rescue-ship");
    let version = state.install(snapshot_of(Corpus::from_articles(articles).unwrap(), true));
    assert_eq!(version, 2);
    let (status, after) = search(&app, golden_draft()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(after["snapshot_version"], 2);
    assert_eq!(after["results"], json!([]));
    let (_, health) = call(&app, "GET", "/v1/health", None).await;
    assert_eq!((health["snapshot_version"].as_u64(), health["articles"].as_u64()), (Some(2), Some(1)));
    assert_valid("health-response", &health);
}

#[tokio::test]
async fn concurrent_requests_survive_swaps() {
    let (state, app) = app_with(snapshot_of(fixture_corpus(), true));
    let mut tasks = Vec::new();
    for i in 0..64 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            let (status, body) = search(&app, golden_draft()).await;
            assert_eq!(status, StatusCode::OK, "request {i}");
            body["results"][0]["id"].as_str().map(str::to_owned)
        }));
    }
    for _ in 0..5 {
        state.install(snapshot_of(fixture_corpus(), true));
        tokio::task::yield_now().await;
    }
    for t in tasks {
        assert_eq!(t.await.unwrap().as_deref(), Some("italy-rejects-rescue-ship"));
    }
}

#[test]
fn request_examples_match_the_schema() {
    assert_valid("search-request", &golden_draft());
    assert_valid("search-request", &json!({"event_text": "x", "mode": "EC", "system": "rrf", "depth": 20}));
    let v = schema("search-request");
    assert!(!v.is_valid(&json!({"event_text": "x", "depth": 0})));
    assert!(!v.is_valid(&json!({"event_text": "x", "mode": "ls"})));
}
