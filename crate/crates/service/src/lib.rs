//! HTTP/JSON API over one project archive.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/projects/{key}/commits/{hash}/recommendations?k=3` | ranked issues |
//! | GET | `/api/projects/{key}/review-batches/{id}` | batch without groups or scores |
//! | POST | `/api/projects/{key}/verdicts` | accept or reject a pair, rater in `X-Rater-Id` |
//! | GET | `/api/projects/{key}/stats` | linkage statistics |
//! | GET | `/api/projects/{key}/kappa?batch={id}` | Fleiss' kappa of a batch |
//!
//! Verdicts are appended to `verdicts.jsonl` and their links to
//! `links.jsonl`; issues and commits are never written.

use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};
use tower_http::cors::CorsLayer;

use trace_forge::eval::review::ReviewBatch;
use trace_forge::eval::{fleiss_kappa, project_stats, Kappa, ProjectStats};
use trace_forge::features::{is_candidate, AttributeSet, CandidateConfig};
use trace_forge::learn::ClassifierKind;
use trace_forge::model::{
    append_jsonl, load_project, read_json, read_jsonl, write_json, ArchiveMeta, ProjectStore, Timestamp, TraceLink,
    SCHEMA_VERSION,
};
use trace_forge::pipeline::{batch_path, evidence_links, Recommendation, Recommender};

pub const DEFAULT_PORT: u16 = 7180;
pub const RATER_HEADER: &str = "x-rater-id";
pub const VERDICTS_FILE: &str = "verdicts.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Core(#[from] trace_forge::Error),
}

impl ApiError {
    fn status(&self) -> StatusCode {
        use trace_forge::Error as E;
        match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Core(E::UnknownCommit(_) | E::UnknownIssue(_)) => StatusCode::NOT_FOUND,
            ApiError::Core(E::InvalidArgument(_)) => StatusCode::BAD_REQUEST,
            ApiError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{self}");
        }
        (status, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub commit_hash: String,
    pub issue_key: String,
    pub decision: Decision,
    pub rater: String,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, Deserialize)]
pub struct VerdictRequest {
    pub commit_hash: String,
    pub issue_key: String,
    pub decision: Decision,
}

/// What a rater sees of a batch entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterEntry {
    pub commit_hash: String,
    pub commit_message: String,
    pub changed_files: Vec<String>,
    pub issue_key: String,
    pub issue_summary: String,
    pub issue_description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterBatch {
    pub id: String,
    pub entries: Vec<RaterEntry>,
}

#[derive(Debug, Clone, Copy)]
pub struct ServiceConfig {
    pub set: AttributeSet,
    pub kind: ClassifierKind,
    pub candidates: CandidateConfig,
    pub include_human: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            set: AttributeSet::All,
            kind: ClassifierKind::RandomForest,
            candidates: CandidateConfig::default(),
            include_human: false,
        }
    }
}

pub struct AppState {
    dir: PathBuf,
    config: ServiceConfig,
    store: RwLock<Arc<ProjectStore>>,
    recommender: RwLock<Option<Arc<Recommender>>>,
    /// Serialises verdict writes.
    writer: Mutex<()>,
}

impl AppState {
    pub fn open(dir: impl Into<PathBuf>, config: ServiceConfig) -> trace_forge::Result<Arc<Self>> {
        let dir = dir.into();
        let store = load_project(&dir)?;
        Ok(Arc::new(AppState {
            dir,
            config,
            store: RwLock::new(Arc::new(store)),
            recommender: RwLock::new(None),
            writer: Mutex::new(()),
        }))
    }

    async fn project(&self, key: &str) -> ApiResult<Arc<ProjectStore>> {
        let store = self.store.read().await.clone();
        if store.project_key != key {
            return Err(ApiError::NotFound(format!("unknown project `{key}`")));
        }
        Ok(store)
    }

    /// The loaded recommender; models trained after start-up are picked up
    /// on the next request.
    async fn recommender(&self) -> ApiResult<Arc<Recommender>> {
        if let Some(r) = self.recommender.read().await.as_ref() {
            return Ok(r.clone());
        }
        let c = self.config;
        match Recommender::load(&self.dir, c.set, c.kind, c.candidates) {
            Ok(r) => {
                let r = Arc::new(r);
                *self.recommender.write().await = Some(r.clone());
                Ok(r)
            }
            Err(e) => Err(ApiError::Conflict(e.to_string())),
        }
    }

    fn verdicts(&self) -> ApiResult<Vec<Verdict>> {
        let path = self.dir.join(VERDICTS_FILE);
        if !path.exists() {
            return Ok(Vec::new());
        }
        Ok(read_jsonl(&path)?)
    }

    fn batch(&self, id: &str) -> ApiResult<ReviewBatch> {
        let valid = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        let path = batch_path(&self.dir, id);
        if !valid || !path.exists() {
            return Err(ApiError::NotFound(format!("unknown review batch `{id}`")));
        }
        Ok(read_json(&path)?)
    }

    fn in_any_batch(&self, hash: &str, key: &str) -> ApiResult<bool> {
        let dir = self.dir.join("batches");
        let Ok(entries) = std::fs::read_dir(&dir) else {
            return Ok(false);
        };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().is_some_and(|e| e == "json") {
                let batch: ReviewBatch = read_json(&path)?;
                if batch.entries.iter().any(|e| e.commit_hash == hash && e.issue_key == key) {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/projects/{key}/commits/{hash}/recommendations", get(recommendations))
        .route("/api/projects/{key}/review-batches/{id}", get(review_batch))
        .route("/api/projects/{key}/verdicts", post(post_verdict))
        .route("/api/projects/{key}/stats", get(stats))
        .route("/api/projects/{key}/kappa", get(kappa))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

#[derive(Deserialize)]
struct KParam {
    k: Option<usize>,
}

async fn recommendations(
    State(state): State<Arc<AppState>>,
    Path((key, hash)): Path<(String, String)>,
    Query(q): Query<KParam>,
) -> ApiResult<Json<Recommendation>> {
    let k = q.k.unwrap_or(3);
    if k == 0 {
        return Err(ApiError::BadRequest("k must be at least 1".into()));
    }
    let store = state.project(&key).await?;
    store.commit(&hash)?;
    let recommender = state.recommender().await?;
    let include_human = state.config.include_human;
    let rec = tokio::task::spawn_blocking(move || {
        let links = evidence_links(&store, include_human);
        recommender.recommend(&store, &hash, k, &links)
    })
    .await
    .map_err(|e| ApiError::Core(trace_forge::Error::Integrity(e.to_string())))??;
    Ok(Json(rec))
}

async fn review_batch(
    State(state): State<Arc<AppState>>,
    Path((key, id)): Path<(String, String)>,
) -> ApiResult<Json<RaterBatch>> {
    let store = state.project(&key).await?;
    let batch = state.batch(&id)?;
    let entries = batch
        .entries
        .iter()
        .map(|e| {
            let c = store.commit(&e.commit_hash)?;
            let i = store.issue(&e.issue_key)?;
            Ok(RaterEntry {
                commit_hash: c.hash.clone(),
                commit_message: c.message.clone(),
                changed_files: c.files.paths().map(str::to_string).collect(),
                issue_key: i.key.clone(),
                issue_summary: i.summary.clone(),
                issue_description: i.description.clone(),
            })
        })
        .collect::<ApiResult<Vec<_>>>()?;
    Ok(Json(RaterBatch { id: batch.id, entries }))
}

fn now() -> Timestamp {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0);
    Timestamp::from_epoch_seconds(secs).expect("clock after the epoch")
}

fn write_meta(dir: &FsPath, store: &ProjectStore) -> trace_forge::Result<()> {
    write_json(
        &dir.join("meta.json"),
        &ArchiveMeta {
            schema_version: SCHEMA_VERSION,
            project_key: store.project_key.clone(),
            issues: store.issues.len(),
            commits: store.commits.len(),
            links: store.links.len(),
        },
    )
}

async fn post_verdict(
    State(state): State<Arc<AppState>>,
    Path(key): Path<String>,
    headers: HeaderMap,
    Json(req): Json<VerdictRequest>,
) -> ApiResult<(StatusCode, Json<TraceLink>)> {
    let rater = headers
        .get(RATER_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .ok_or_else(|| ApiError::BadRequest(format!("missing {RATER_HEADER} header")))?
        .to_string();
    state.project(&key).await?;

    let _guard = state.writer.lock().await;
    let store = state.store.read().await.clone();
    let (Ok(commit), Ok(issue)) = (store.commit(&req.commit_hash), store.issue(&req.issue_key)) else {
        return Err(ApiError::NotFound(format!("unknown pair {} -> {}", req.commit_hash, req.issue_key)));
    };
    let servable = is_candidate(commit, issue, &state.config.candidates)
        || state.in_any_batch(&req.commit_hash, &req.issue_key)?;
    if !servable {
        return Err(ApiError::NotFound(format!(
            "{} -> {} is neither a candidate pair nor a batch entry",
            req.commit_hash, req.issue_key
        )));
    }
    let duplicate = state
        .verdicts()?
        .iter()
        .any(|v| v.rater == rater && v.commit_hash == req.commit_hash && v.issue_key == req.issue_key);
    if duplicate {
        return Err(ApiError::Conflict(format!(
            "{rater} already judged {} -> {}",
            req.commit_hash, req.issue_key
        )));
    }

    let at = now();
    let verdict = Verdict {
        commit_hash: req.commit_hash.clone(),
        issue_key: req.issue_key.clone(),
        decision: req.decision,
        rater: rater.clone(),
        timestamp: at,
    };
    append_jsonl(&state.dir.join(VERDICTS_FILE), &verdict)?;
    let link = TraceLink::human(&req.commit_hash, &req.issue_key, req.decision == Decision::Accept, rater, at);
    let mut updated = (*store).clone();
    if updated.add_link(link.clone())? {
        append_jsonl(&state.dir.join("links.jsonl"), &link)?;
        write_meta(&state.dir, &updated)?;
    }
    *state.store.write().await = Arc::new(updated);
    Ok((StatusCode::CREATED, Json(link)))
}

async fn stats(State(state): State<Arc<AppState>>, Path(key): Path<String>) -> ApiResult<Json<ProjectStats>> {
    let store = state.project(&key).await?;
    Ok(Json(project_stats(&store)))
}

#[derive(Deserialize)]
struct BatchParam {
    batch: String,
}

/// Kappa over the raters who judged every entry of the batch.
async fn kappa(
    State(state): State<Arc<AppState>>,
    Path(key): Path<String>,
    Query(q): Query<BatchParam>,
) -> ApiResult<Json<Kappa>> {
    state.project(&key).await?;
    let batch = state.batch(&q.batch)?;
    let verdicts = state.verdicts()?;
    let decision = |rater: &str, hash: &str, key: &str| {
        verdicts
            .iter()
            .find(|v| v.rater == rater && v.commit_hash == hash && v.issue_key == key)
            .map(|v| v.decision)
    };
    let mut raters: Vec<&str> = verdicts.iter().map(|v| v.rater.as_str()).collect();
    raters.sort_unstable();
    raters.dedup();
    raters.retain(|r| {
        batch
            .entries
            .iter()
            .all(|e| decision(r, &e.commit_hash, &e.issue_key).is_some())
    });
    if raters.len() < 2 {
        return Err(ApiError::Conflict(format!(
            "kappa needs two raters who judged all {} entries, {} did",
            batch.entries.len(),
            raters.len()
        )));
    }
    let matrix: Vec<Vec<u32>> = batch
        .entries
        .iter()
        .map(|e| {
            let mut row = vec![0u32; 2];
            for r in &raters {
                match decision(r, &e.commit_hash, &e.issue_key) {
                    Some(Decision::Accept) => row[0] += 1,
                    _ => row[1] += 1,
                }
            }
            row
        })
        .collect();
    Ok(Json(fleiss_kappa(&matrix)?))
}
