//! HTTP API over a grouped meme corpus.
//!
//! Serves the groups, their images and emotion summaries, accepts survey
//! responses into the append-only log, and reports the same statistics the
//! command line computes. Every number comes from `memesim_core`.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use memesim_core::corpus::{load_corpus, Corpus, MemeRecord, Schema};
use memesim_core::emotion::{
    annotate_with_lexicon, emotion_distribution, group_emotions, load_emotion_sidecar,
    EmotionAnnotations, EmotionDistribution, EmotionLabel, GroupEmotion,
};
use memesim_core::evaluation::{agreement_report, AgreementReport, ResponseLog, SurveyResponse};
use memesim_core::grouping::{group_stats, load_groups_json, GroupReport, MemeGroup};
use memesim_core::{Error as CoreError, ErrorKind};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot start service, unreadable inputs: {}", .0.join(", "))]
    MissingInputs(Vec<String>),

    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("server error: {0}")]
    Serve(#[source] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub corpus: PathBuf,
    pub schema: Schema,
    /// Groups JSON written by the `group` step.
    pub groups: PathBuf,
    /// Emotion sidecar; the built-in lexicon is used when absent.
    pub annotations: Option<PathBuf>,
    /// JSONL response log; created on first append.
    pub responses: PathBuf,
    pub image_dir: Option<PathBuf>,
    /// Static bundle of the survey front end, served at `/`.
    pub static_dir: Option<PathBuf>,
    pub read_only: bool,
}

impl ServiceConfig {
    fn check(&self) -> Result<(), ServiceError> {
        if self.bind.port() == 0 {
            return Err(ServiceError::Config("port must be in 1..=65535".into()));
        }
        let mut missing = Vec::new();
        let mut need_file = |p: &Path| {
            if !p.is_file() {
                missing.push(p.display().to_string());
            }
        };
        need_file(&self.corpus);
        need_file(&self.groups);
        if let Some(a) = &self.annotations {
            need_file(a);
        }
        for dir in [&self.image_dir, &self.static_dir].into_iter().flatten() {
            if !dir.is_dir() {
                missing.push(dir.display().to_string());
            }
        }
        if let Some(parent) = self.responses.parent().filter(|p| !p.as_os_str().is_empty()) {
            if !parent.is_dir() {
                missing.push(parent.display().to_string());
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ServiceError::MissingInputs(missing))
        }
    }
}

/// Everything derived from the input files; swapped as a whole on reload.
#[derive(Debug)]
pub struct Dataset {
    pub corpus: Corpus,
    corpus_index: HashMap<String, usize>,
    pub groups: Vec<MemeGroup>,
    pub annotations: EmotionAnnotations,
    pub group_emotions: BTreeMap<usize, GroupEmotion>,
    group_index: HashMap<usize, usize>,
}

impl Dataset {
    pub fn load(config: &ServiceConfig) -> Result<Self, ServiceError> {
        config.check()?;
        let corpus = load_corpus(&config.corpus, config.schema)?.corpus;
        let groups = load_groups_json(&config.groups)?;
        let index = corpus.index();
        for g in &groups {
            if let Some(m) = g.members.iter().find(|m| !index.contains_key(m.as_str())) {
                return Err(CoreError::Lookup(format!("group {} lists `{m}`, which is not in the corpus", g.group_id)).into());
            }
        }
        let annotations = match &config.annotations {
            Some(path) => {
                let mut ann = load_emotion_sidecar(path)?;
                let dropped = ann.restrict_to(&corpus);
                if !dropped.is_empty() {
                    log::warn!("{} sidecar rows do not match a text-bearing corpus meme", dropped.len());
                }
                ann
            }
            None => annotate_with_lexicon(&corpus),
        };
        Ok(Dataset::new(corpus, groups, annotations))
    }

    pub fn new(corpus: Corpus, groups: Vec<MemeGroup>, annotations: EmotionAnnotations) -> Self {
        let group_emotions = group_emotions(&groups, &annotations);
        let group_index = groups.iter().enumerate().map(|(i, g)| (g.group_id, i)).collect();
        Dataset {
            corpus_index: corpus.index(),
            corpus,
            groups,
            annotations,
            group_emotions,
            group_index,
        }
    }

    pub fn group(&self, id: usize) -> Option<&MemeGroup> {
        self.group_index.get(&id).map(|&i| &self.groups[i])
    }

    pub fn meme(&self, id: &str) -> Option<&MemeRecord> {
        self.corpus_index.get(id).map(|&i| &self.corpus.records[i])
    }
}

/// Shared service state. Readers take a snapshot `Arc<Dataset>`; all log
/// appends go through the one mutex-guarded writer.
pub struct AppState {
    config: ServiceConfig,
    data: RwLock<Arc<Dataset>>,
    log: Mutex<ResponseLog>,
}

impl AppState {
    pub fn open(config: ServiceConfig) -> Result<Arc<Self>, ServiceError> {
        let data = Dataset::load(&config)?;
        let log = ResponseLog::open(&config.responses)?;
        Ok(Arc::new(AppState {
            config,
            data: RwLock::new(Arc::new(data)),
            log: Mutex::new(log),
        }))
    }

    pub fn dataset(&self) -> Arc<Dataset> {
        self.data.read().expect("dataset lock").clone()
    }

    pub fn responses(&self) -> Vec<SurveyResponse> {
        self.log.lock().expect("log lock").responses().to_vec()
    }

    /// Rereads every input file and the response log, replacing the current
    /// state only if all of them load.
    pub fn reload(&self) -> Result<(), ServiceError> {
        let data = Dataset::load(&self.config)?;
        let log = ResponseLog::open(&self.config.responses)?;
        let mut guard = self.log.lock().expect("log lock");
        *self.data.write().expect("dataset lock") = Arc::new(data);
        *guard = log;
        Ok(())
    }

    pub fn snapshot_stats(&self) -> StatsBundle {
        let data = self.dataset();
        let responses = self.responses();
        StatsBundle::compute(&data, &responses)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsBundle {
    pub agreement: AgreementReport,
    pub emotions: EmotionDistribution,
    pub groups: GroupReport,
}

impl StatsBundle {
    pub fn compute(data: &Dataset, responses: &[SurveyResponse]) -> Self {
        StatsBundle {
            agreement: agreement_report(responses),
            emotions: emotions_or_empty(&data.annotations),
            groups: group_stats(&data.groups).expect("groups validated at load"),
        }
    }
}

fn emotions_or_empty(ann: &EmotionAnnotations) -> EmotionDistribution {
    emotion_distribution(ann).unwrap_or(EmotionDistribution {
        total: 0,
        rows: Vec::new(),
    })
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn read_only() -> Self {
        ApiError::new(StatusCode::FORBIDDEN, "read_only", "the service is read-only")
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let (status, code) = match e.kind() {
            ErrorKind::Conflict => (StatusCode::CONFLICT, "conflict"),
            ErrorKind::Lookup => (StatusCode::NOT_FOUND, "not_found"),
            ErrorKind::Io => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
            ErrorKind::Input | ErrorKind::Config => (StatusCode::BAD_REQUEST, "invalid_request"),
            ErrorKind::Alignment | ErrorKind::Data | ErrorKind::Empty => (StatusCode::BAD_REQUEST, "invalid_data"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Core(c) => c.into(),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "reload_failed", other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = Arc<AppState>;

#[derive(Debug, Serialize)]
struct GroupSummary<'a> {
    group_id: usize,
    size: usize,
    members: &'a [String],
    #[serde(serialize_with = "dominant_str")]
    dominant_emotion: Option<EmotionLabel>,
}

fn dominant_str<S: serde::Serializer>(v: &Option<EmotionLabel>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(v.map_or("unlabeled", EmotionLabel::as_str))
}

async fn list_groups(State(state): State<Shared>) -> Response {
    let data = state.dataset();
    let body: Vec<GroupSummary> = data
        .groups
        .iter()
        .map(|g| GroupSummary {
            group_id: g.group_id,
            size: g.size(),
            members: &g.members,
            dominant_emotion: data.group_emotions.get(&g.group_id).and_then(|e| e.dominant),
        })
        .collect();
    Json(body).into_response()
}

#[derive(Debug, Serialize)]
struct MemberView<'a> {
    meme_id: &'a str,
    image_url: String,
    text: &'a str,
}

#[derive(Debug, Serialize)]
struct GroupDetail<'a> {
    group_id: usize,
    members: Vec<MemberView<'a>>,
    #[serde(serialize_with = "dominant_str")]
    dominant_emotion: Option<EmotionLabel>,
    emotion_histogram: &'a BTreeMap<EmotionLabel, u64>,
}

fn encode_segment(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b"-._~".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

async fn get_group(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let gid: usize = id
        .parse()
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", format!("`{id}` is not a group id")))?;
    let data = state.dataset();
    let group = data.group(gid).ok_or_else(|| ApiError::not_found(format!("no group {gid}")))?;
    let emotion = &data.group_emotions[&gid];
    let detail = GroupDetail {
        group_id: gid,
        members: group
            .members
            .iter()
            .map(|m| MemberView {
                meme_id: m,
                image_url: format!("/api/memes/{}/image", encode_segment(m)),
                text: data.meme(m).map_or("", |r| r.text.as_str()),
            })
            .collect(),
        dominant_emotion: emotion.dominant,
        emotion_histogram: &emotion.histogram,
    };
    Ok(Json(detail).into_response())
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("png") => "image/png",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        Some("html") => "text/html; charset=utf-8",
        Some("js") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

/// A single path component that cannot escape its directory.
fn safe_component(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && !name.contains(['/', '\\', '\0'])
}

async fn file_response(path: PathBuf) -> ApiResult<Response> {
    match tokio::fs::read(&path).await {
        Ok(bytes) => Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(ApiError::not_found("file not found")),
        Err(e) => Err(CoreError::io(path, e).into()),
    }
}

async fn meme_image(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let dir = state
        .config
        .image_dir
        .as_ref()
        .ok_or_else(|| ApiError::not_found("no image directory configured"))?;
    if !safe_component(&id) || state.dataset().meme(&id).is_none() {
        return Err(ApiError::not_found(format!("no meme `{id}`")));
    }
    file_response(dir.join(&id)).await
}

/// Survey submission. The timestamp defaults to the time of receipt.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseRequest {
    pub participant_id: String,
    pub group_id: usize,
    pub similar: bool,
    #[serde(default)]
    pub emotion: Option<EmotionLabel>,
    #[serde(default)]
    pub timestamp: Option<i64>,
}

fn now_seconds() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs() as i64)
}

async fn post_response(State(state): State<Shared>, body: axum::body::Bytes) -> ApiResult<Response> {
    if state.config.read_only {
        return Err(ApiError::read_only());
    }
    let req: ResponseRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.to_string()))?;
    if state.dataset().group(req.group_id).is_none() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "unknown_group",
            format!("no group {}", req.group_id),
        ));
    }
    let response = SurveyResponse {
        participant_id: req.participant_id,
        group_id: req.group_id,
        similar: req.similar,
        emotion: req.emotion,
        timestamp: req.timestamp.unwrap_or_else(now_seconds),
    };
    state.log.lock().expect("log lock").append(response.clone())?;
    Ok((StatusCode::CREATED, Json(response)).into_response())
}

async fn agreement(State(state): State<Shared>) -> Response {
    Json(agreement_report(&state.responses())).into_response()
}

async fn emotions(State(state): State<Shared>) -> Response {
    Json(emotions_or_empty(&state.dataset().annotations)).into_response()
}

async fn health(State(state): State<Shared>) -> Response {
    let data = state.dataset();
    Json(serde_json::json!({
        "status": "ok",
        "memes": data.corpus.len(),
        "groups": data.groups.len(),
        "responses": state.log.lock().expect("log lock").responses().len(),
        "read_only": state.config.read_only,
    }))
    .into_response()
}

async fn reload(State(state): State<Shared>) -> ApiResult<Response> {
    if state.config.read_only {
        return Err(ApiError::read_only());
    }
    let s = state.clone();
    tokio::task::spawn_blocking(move || s.reload())
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "reload_failed", e.to_string()))??;
    Ok(Json(serde_json::json!({ "status": "reloaded" })).into_response())
}

async fn static_files(State(state): State<Shared>, uri: Uri) -> ApiResult<Response> {
    let dir = state
        .config
        .static_dir
        .as_ref()
        .ok_or_else(|| ApiError::not_found(format!("no route for {}", uri.path())))?;
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    if !rel.split('/').all(safe_component) {
        return Err(ApiError::not_found(format!("no route for {}", uri.path())));
    }
    file_response(dir.join(rel)).await
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/groups", get(list_groups))
        .route("/api/groups/{id}", get(get_group))
        .route("/api/memes/{id}/image", get(meme_image))
        .route("/api/responses", post(post_response))
        .route("/api/stats/agreement", get(agreement))
        .route("/api/stats/emotions", get(emotions))
        .route("/api/health", get(health))
        .route("/api/reload", post(reload))
        .fallback(static_files)
        .with_state(state)
}

/// Loads all inputs, binds, and serves until interrupted.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let addr = config.bind;
    let state = AppState::open(config)?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    log::info!("listening on http://{}", listener.local_addr().map_err(ServiceError::Serve)?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_components_cannot_escape() {
        assert!(safe_component("image_1.jpg"));
        for bad in ["", ".", "..", "../x", "a/b", "a\\b", "a\0b"] {
            assert!(!safe_component(bad), "{bad:?}");
        }
    }

    #[test]
    fn url_segments_are_percent_encoded() {
        assert_eq!(encode_segment("image_1.jpg"), "image_1.jpg");
        assert_eq!(encode_segment("a b/c"), "a%20b%2Fc");
    }

    #[test]
    fn content_types_by_extension() {
        assert_eq!(content_type(Path::new("x.JPG")), "image/jpeg");
        assert_eq!(content_type(Path::new("x.png")), "image/png");
        assert_eq!(content_type(Path::new("x")), "application/octet-stream");
    }

    #[test]
    fn core_errors_map_to_statuses() {
        let e: ApiError = CoreError::Conflict("dup".into()).into();
        assert_eq!(e.status, StatusCode::CONFLICT);
        let e: ApiError = CoreError::Config("bad".into()).into();
        assert_eq!(e.status, StatusCode::BAD_REQUEST);
        let e: ApiError = CoreError::Lookup("x".into()).into();
        assert_eq!(e.status, StatusCode::NOT_FOUND);
    }
}
