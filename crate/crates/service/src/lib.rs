//! HTTP front end: projects, evidence upload, analysis runs and reports.
//!
//! Runs of one project execute strictly in submission order on a
//! per-project worker; runs of different projects proceed independently.

pub mod store;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{SecondsFormat, Utc};
use equiscope_core::context::LabelMap;
use equiscope_core::measures::{ConfigError, ConfigOverrides, WeightConfig};
use equiscope_core::pipeline::{run_analysis, OverrideRecord, Review, RunEnvelope, RunStatus};
use equiscope_core::provider::{ProviderChoice, Session, Transcript};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::mpsc;

pub use store::{FileStore, ProjectRecord, Store, StoreError, ValidationReport};

/// Header carrying the shared token when one is configured.
pub const TOKEN_HEADER: &str = "x-equiscope-token";

const MAX_ARCHIVE_BYTES: usize = 512 * 1024 * 1024;

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Micros, true)
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    store: Arc<dyn Store>,
    token: Option<String>,
    labels: LabelMap,
    queues: Mutex<HashMap<String, mpsc::UnboundedSender<String>>>,
}

impl AppState {
    pub fn new(store: Arc<dyn Store>, token: Option<String>) -> Self {
        Self {
            inner: Arc::new(Inner {
                store,
                token,
                labels: LabelMap::shipped(),
                queues: Mutex::new(HashMap::new()),
            }),
        }
    }

    pub fn store(&self) -> &Arc<dyn Store> {
        &self.inner.store
    }

    /// Hands a run to its project's worker, starting the worker on first use.
    fn enqueue(&self, project: &str, run_id: String) {
        let mut queues = self.inner.queues.lock().unwrap_or_else(|p| p.into_inner());
        let tx = queues.entry(project.to_string()).or_insert_with(|| {
            let (tx, rx) = mpsc::unbounded_channel();
            tokio::spawn(worker(self.clone(), rx));
            tx
        });
        // the receiver lives as long as the state, so send cannot fail
        let _ = tx.send(run_id);
    }

    /// Re-queues runs left pending or running by a previous process, in
    /// creation order.
    pub fn resume(&self) -> Result<usize, StoreError> {
        let mut resumed = 0;
        for p in self.store().projects()? {
            for run in self.store().runs(&p.project_id)? {
                if matches!(run.status, RunStatus::Pending | RunStatus::Running) {
                    self.enqueue(&run.project_id, run.run_id.clone());
                    resumed += 1;
                }
            }
        }
        Ok(resumed)
    }
}

async fn worker(state: AppState, mut rx: mpsc::UnboundedReceiver<String>) {
    while let Some(run_id) = rx.recv().await {
        let s = state.clone();
        let id = run_id.clone();
        let outcome = tokio::task::spawn_blocking(move || execute(&s, &id)).await;
        if let Err(e) = outcome.map_err(|e| e.to_string()).and_then(|r| r.map_err(|e| e.to_string())) {
            tracing::error!(run = %run_id, "run failed: {e}");
            if let Ok(mut run) = state.store().run(&run_id) {
                run.status = RunStatus::Failed;
                run.completed_at = Some(now());
                run.error = Some(e);
                let _ = state.store().put_run(&run);
            }
        }
    }
}

/// Runs the analysis of one queued run and records the outcome.
fn execute(state: &AppState, run_id: &str) -> Result<(), StoreError> {
    let store = state.store();
    let mut run = store.run(run_id)?;
    if run.status == RunStatus::Complete {
        return Ok(());
    }
    run.status = RunStatus::Running;
    run.started_at = Some(now());
    store.put_run(&run)?;

    let bundle = store.load_bundle(&run.project_id, &run.bundle_version)?;
    let provider = match &run.provider {
        Some(kind) if kind == "none" => None,
        kind => Some(
            ProviderChoice::from_env(kind.as_deref(), run.config.seed)
                .map_err(StoreError::Invalid)?
                .build(),
        ),
    };
    let transcript_path = store.transcript_path(run_id)?;
    if transcript_path.exists() {
        // an interrupted attempt; its exchanges are superseded
        std::fs::remove_file(&transcript_path)?;
    }
    let transcript = Transcript::with_file(&transcript_path)?;
    let session = provider.as_deref().map(|p| Session::new(p, &transcript));
    let body = run_analysis(&bundle, &run.config, &state.inner.labels, session.as_ref());
    let report_path = store.put_report(run_id, &body.to_canonical_json())?;

    run.status = RunStatus::Complete;
    run.completed_at = Some(now());
    run.report_path = Some(report_path);
    run.transcript_path = Some(format!("runs/{run_id}/transcript.jsonl"));
    store.put_run(&run)
}

pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn config(e: &ConfigError) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: json!({
                "error": format!("invalid configuration: {e}"),
                "issues": e.issues.iter().map(|i| json!({"path": i.path, "message": i.message})).collect::<Vec<_>>(),
            }),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::Conflict(_) => StatusCode::CONFLICT,
            StoreError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            StoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, StoreError> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

#[derive(Deserialize)]
struct NewProject {
    project_id: String,
    #[serde(flatten)]
    rest: serde_json::Map<String, Value>,
}

async fn create_project(State(state): State<AppState>, Json(req): Json<NewProject>) -> ApiResult<impl IntoResponse> {
    if !store::valid_id(&req.project_id) {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "project_id must use letters, digits, '-', '_' or '.'",
        ));
    }
    let mut manifest = req.rest;
    manifest.insert("project_id".into(), Value::String(req.project_id.clone()));
    let record = ProjectRecord {
        project_id: req.project_id,
        manifest: Value::Object(manifest),
        created_at: now(),
        bundle_versions: Vec::new(),
    };
    let store = state.store().clone();
    let r = record.clone();
    blocking(move || store.create_project(&r)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "project_id": record.project_id }))))
}

async fn list_projects(State(state): State<AppState>) -> ApiResult<Json<Vec<ProjectRecord>>> {
    let store = state.store().clone();
    Ok(Json(blocking(move || store.projects()).await?))
}

async fn get_project(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<ProjectRecord>> {
    let store = state.store().clone();
    Ok(Json(blocking(move || store.project(&id)).await?))
}

async fn upload_evidence(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let store = state.store().clone();
    let report = blocking(move || store.put_bundle(&id, &body, &now())).await?;
    let status = if report.existing { StatusCode::OK } else { StatusCode::CREATED };
    Ok((status, Json(report)))
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    /// Overrides layered over the defaults, or over the base run's
    /// configuration for what-if runs.
    #[serde(default)]
    pub config: ConfigOverrides,
    #[serde(default)]
    pub bundle_version: Option<String>,
    /// Earlier run whose bundle version and configuration this run starts
    /// from.
    #[serde(default)]
    pub base_run: Option<String>,
    /// `mock`, `http` or `none`; defaults to the environment, then mock.
    #[serde(default)]
    pub provider: Option<String>,
}

/// Overrides that reproduce `config` exactly when applied to the defaults.
fn as_overrides(config: &WeightConfig) -> ConfigOverrides {
    let value = serde_json::to_value(config).unwrap_or(Value::Null);
    serde_json::from_value(value).unwrap_or_default()
}

async fn create_run(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Option<Json<RunRequest>>,
) -> ApiResult<impl IntoResponse> {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    if let Some(p) = &req.provider {
        if !matches!(p.as_str(), "mock" | "http" | "none") {
            return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("unknown provider {p:?}")));
        }
    }
    let store = state.store().clone();
    let project_id = id.clone();
    let run = blocking(move || -> Result<Result<RunEnvelope, ConfigError>, StoreError> {
        let project = store.project(&project_id)?;
        let base = req.base_run.as_deref().map(|b| store.run(b)).transpose()?;
        if let Some(b) = &base {
            if b.project_id != project_id {
                return Err(StoreError::Invalid(format!("run {} belongs to another project", b.run_id)));
            }
        }
        let overrides = match &base {
            Some(b) => as_overrides(&b.config).then(&req.config),
            None => req.config.clone(),
        };
        let config = match WeightConfig::from_overrides(&overrides) {
            Ok(c) => c,
            Err(e) => return Ok(Err(e)),
        };
        let version = match (&req.bundle_version, &base) {
            (Some(v), _) => project
                .bundle_versions
                .iter()
                .find(|x| &x.version == v)
                .filter(|x| x.valid)
                .ok_or_else(|| StoreError::Invalid(format!("bundle version {v} is unknown or invalid")))?
                .version
                .clone(),
            (None, Some(b)) => b.bundle_version.clone(),
            (None, None) => project
                .latest_valid()
                .ok_or_else(|| StoreError::Invalid("project has no valid bundle version".into()))?
                .version
                .clone(),
        };
        let run = RunEnvelope {
            run_id: store.next_run_id()?,
            project_id: project_id.clone(),
            bundle_version: version,
            status: RunStatus::Pending,
            created_at: now(),
            started_at: None,
            completed_at: None,
            config,
            base_run: req.base_run.clone(),
            provider: req.provider.clone(),
            report_path: None,
            transcript_path: None,
            error: None,
            review: Review::default(),
        };
        store.put_run(&run)?;
        Ok(Ok(run))
    })
    .await?
    .map_err(|e| ApiError::config(&e))?;
    state.enqueue(&id, run.run_id.clone());
    Ok((StatusCode::ACCEPTED, Json(run)))
}

async fn list_runs(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Vec<RunEnvelope>>> {
    let store = state.store().clone();
    Ok(Json(blocking(move || store.runs(&id)).await?))
}

async fn get_run(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<RunEnvelope>> {
    let store = state.store().clone();
    Ok(Json(blocking(move || store.run(&id)).await?))
}

async fn get_report(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let store = state.store().clone();
    let (run, body) = blocking(move || {
        let run = store.run(&id)?;
        if run.status != RunStatus::Complete {
            return Ok((run, None));
        }
        let body = store.report(&id)?;
        Ok((run, Some(body)))
    })
    .await?;
    let Some(body) = body else {
        let status = serde_json::to_value(run.status).unwrap_or(Value::Null);
        return Ok((
            StatusCode::CONFLICT,
            Json(json!({ "error": format!("run {} is not complete", run.run_id), "status": status })),
        )
            .into_response());
    };
    let body: Value = serde_json::from_str(&body).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(json!({ "run": run, "body": body })).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReviewRequest {
    #[serde(default)]
    reviewed: Option<bool>,
    #[serde(default)]
    annotation: Option<String>,
    #[serde(default, rename = "override")]
    override_: Option<NewOverride>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewOverride {
    target: String,
    value: Value,
    #[serde(default)]
    note: String,
    author: String,
}

/// Records instructor review on the envelope; the report body is untouched.
async fn review_run(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<ReviewRequest>,
) -> ApiResult<Json<RunEnvelope>> {
    let store = state.store().clone();
    Ok(Json(
        blocking(move || {
            let mut run = store.run(&id)?;
            if run.status != RunStatus::Complete {
                return Err(StoreError::Invalid(format!("run {id} is not complete")));
            }
            if let Some(r) = req.reviewed {
                run.review.reviewed = r;
            }
            if let Some(a) = req.annotation {
                run.review.annotation = Some(a);
            }
            if let Some(o) = req.override_ {
                run.review.overrides.push(OverrideRecord {
                    target: o.target,
                    value: o.value,
                    note: o.note,
                    author: o.author,
                    at: now(),
                });
            }
            store.put_run(&run)?;
            Ok(run)
        })
        .await?,
    ))
}

async fn check_token(State(state): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(expected) = &state.inner.token {
        let given = req.headers().get(TOKEN_HEADER).and_then(|v| v.to_str().ok());
        if given != Some(expected.as_str()) {
            return ApiError::new(StatusCode::UNAUTHORIZED, format!("missing or wrong {TOKEN_HEADER} header")).into_response();
        }
    }
    next.run(req).await
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/projects", post(create_project).get(list_projects))
        .route("/projects/{id}", get(get_project))
        .route(
            "/projects/{id}/evidence",
            post(upload_evidence).layer(DefaultBodyLimit::max(MAX_ARCHIVE_BYTES)),
        )
        .route("/projects/{id}/runs", post(create_run).get(list_runs))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/report", get(get_report))
        .route("/runs/{id}/review", post(review_run))
        .layer(middleware::from_fn_with_state(state.clone(), check_token))
        .with_state(state)
}

pub struct ServeOptions {
    pub port: u16,
    pub data_dir: PathBuf,
    pub token: Option<String>,
}

pub fn open_state(data_dir: &Path, token: Option<String>) -> Result<AppState, StoreError> {
    let store = FileStore::open(data_dir)?;
    Ok(AppState::new(Arc::new(store), token))
}

pub async fn serve(opts: ServeOptions) -> std::io::Result<()> {
    let state = open_state(&opts.data_dir, opts.token).map_err(std::io::Error::other)?;
    let resumed = state.resume().map_err(std::io::Error::other)?;
    if resumed > 0 {
        tracing::info!("re-queued {resumed} unfinished runs");
    }
    let addr = SocketAddr::from(([0, 0, 0, 0], opts.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
