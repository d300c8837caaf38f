//! The HTTP service.
//!
//! Design and replay requests become jobs on a fixed pool of worker threads
//! and are answered with 202 and a job id; clients poll. Each design has one
//! writer at a time, and written versions are never touched again, so read
//! endpoints serve files straight from disk without locking.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use roomsmith::agents::DesignRequest;
use roomsmith::compose::{
    design_id, new_design, new_solve, next_version, read_index, run_stages, store_new, version_dir, BundleStage,
    BundleStatus, ComposeError, ReplayOverrides, StageFailure, INDEX_FILE,
};
use roomsmith::retrieval::RetrievalError;

use crate::commands::{self, RunOutcome};
use crate::config::{RunConfig, Services};
use crate::CliError;

type Task = Box<dyn FnOnce() + Send>;

/// Fixed set of threads taking jobs from a queue. Threads exit once the
/// pool is dropped and the queue drains.
struct WorkerPool {
    tx: mpsc::Sender<Task>,
}

impl WorkerPool {
    fn new(workers: usize) -> Self {
        let (tx, rx) = mpsc::channel::<Task>();
        let rx = Arc::new(Mutex::new(rx));
        for i in 0..workers.max(1) {
            let rx = Arc::clone(&rx);
            std::thread::Builder::new()
                .name(format!("roomsmith-worker-{i}"))
                .spawn(move || loop {
                    let task = rx.lock().expect("job queue").recv();
                    match task {
                        Ok(task) => task(),
                        Err(_) => break,
                    }
                })
                .expect("spawn worker thread");
        }
        Self { tx }
    }

    fn submit(&self, task: Task) {
        self.tx.send(task).expect("workers outlive the pool handle");
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Design,
    Solve,
    Replay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    /// A bundle version was written; see `bundle_status` for how the run ended.
    Done,
    /// No bundle could be written.
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job: String,
    /// Design id.
    pub id: String,
    pub kind: JobKind,
    pub status: JobStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bundle_status: Option<BundleStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<StageFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub struct AppState {
    config: RunConfig,
    services: Services,
    jobs: Mutex<BTreeMap<String, Job>>,
    /// Most recent job per design id.
    latest: Mutex<HashMap<String, String>>,
    writers: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    pool: WorkerPool,
    next_job: AtomicU64,
}

impl AppState {
    pub fn new(config: RunConfig, services: Services) -> Arc<AppState> {
        let workers = config.service.workers;
        Arc::new(AppState {
            config,
            services,
            jobs: Mutex::new(BTreeMap::new()),
            latest: Mutex::new(HashMap::new()),
            writers: Mutex::new(HashMap::new()),
            pool: WorkerPool::new(workers),
            next_job: AtomicU64::new(1),
        })
    }

    fn design_dir(&self, id: &str) -> PathBuf {
        self.config.out_root.join(id)
    }

    fn writer(&self, id: &str) -> Arc<Mutex<()>> {
        Arc::clone(self.writers.lock().expect("writer table").entry(id.to_string()).or_default())
    }

    fn update(&self, job: &str, f: impl FnOnce(&mut Job)) {
        if let Some(j) = self.jobs.lock().expect("job table").get_mut(job) {
            f(j);
        }
    }

    fn job(&self, job: &str) -> Option<Job> {
        self.jobs.lock().expect("job table").get(job).cloned()
    }

    fn latest_job(&self, id: &str) -> Option<Job> {
        let job = self.latest.lock().expect("latest jobs").get(id).cloned()?;
        self.job(&job)
    }

    /// Queues `work` as a job for design `id`. The work runs while holding
    /// the design's writer lock.
    fn enqueue(
        self: &Arc<Self>,
        id: String,
        kind: JobKind,
        work: impl FnOnce(&AppState) -> Result<RunOutcome, CliError> + Send + 'static,
    ) -> Job {
        let job_id = format!("j{}", self.next_job.fetch_add(1, Ordering::SeqCst));
        let job = Job {
            job: job_id.clone(),
            id: id.clone(),
            kind,
            status: JobStatus::Queued,
            version: None,
            bundle_status: None,
            failure: None,
            error: None,
        };
        self.jobs.lock().expect("job table").insert(job_id.clone(), job.clone());
        self.latest.lock().expect("latest jobs").insert(id.clone(), job_id.clone());
        let state = Arc::clone(self);
        self.pool.submit(Box::new(move || {
            state.update(&job_id, |j| j.status = JobStatus::Running);
            let writer = state.writer(&id);
            let result = {
                let _guard = writer.lock().unwrap_or_else(|p| p.into_inner());
                std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| work(&state)))
                    .unwrap_or_else(|_| Err(CliError::Internal("job panicked".into())))
            };
            match result {
                Ok(outcome) => {
                    tracing::info!(job = %job_id, dir = %outcome.dir.display(), status = ?outcome.status, "job finished");
                    state.update(&job_id, |j| {
                        j.status = JobStatus::Done;
                        j.version = roomsmith::compose::version_of(&outcome.dir);
                        j.bundle_status = Some(outcome.status);
                        j.failure = outcome.failure;
                    });
                }
                Err(e) => {
                    tracing::error!(job = %job_id, error = %e, "job failed");
                    state.update(&job_id, |j| {
                        j.status = JobStatus::Error;
                        j.error = Some(e.to_string());
                    });
                }
            }
        }));
        job
    }
}

fn error(status: StatusCode, message: impl std::fmt::Display) -> Response {
    (status, Json(json!({"error": message.to_string()}))).into_response()
}

fn compose_status(e: &ComposeError) -> StatusCode {
    match e {
        ComposeError::UnknownStage(_) | ComposeError::InvalidOverride(_) => StatusCode::BAD_REQUEST,
        ComposeError::MissingInput(_) => StatusCode::CONFLICT,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn cli_error(e: CliError) -> Response {
    let status = match &e {
        CliError::Input(_) => StatusCode::BAD_REQUEST,
        CliError::Config(_) => StatusCode::SERVICE_UNAVAILABLE,
        CliError::Compose(c) => compose_status(c),
        CliError::Retrieval(RetrievalError::InvalidK | RetrievalError::ZeroQuery) => StatusCode::BAD_REQUEST,
        CliError::Retrieval(RetrievalError::EmbedderUnavailable(_)) => StatusCode::BAD_GATEWAY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    };
    error(status, e)
}

/// Design ids are `d` plus 12 hex digits; anything else is not a design
/// (and never reaches the file system).
fn valid_design_id(id: &str) -> bool {
    id.len() == 13 && id.starts_with('d') && id[1..].bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/designs", post(create_design))
        .route("/designs/{id}", get(get_design))
        .route("/designs/{id}/graph", get(|s, p, q| artifact(s, p, q, "graph.json")))
        .route("/designs/{id}/layout", get(|s, p, q| artifact(s, p, q, "layout.json")))
        .route("/designs/{id}/floorplan", get(|s, p, q| artifact(s, p, q, "floorplan.svg")))
        .route("/designs/{id}/manifest", get(|s, p, q| artifact(s, p, q, "manifest.json")))
        .route("/designs/{id}/replay", post(replay))
        .route("/jobs/{job}", get(get_job))
        .route("/assets/search", get(search))
        .with_state(state)
}

/// Binds `config.service.addr` and serves until Ctrl-C.
pub async fn serve(config: RunConfig, services: Services) -> std::io::Result<()> {
    let addr = config.service.addr.clone();
    let app = router(AppState::new(config, services));
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn healthz(State(s): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "backend": s.services.has_backend,
        "assets": s.services.index.as_ref().map(|i| i.len()),
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateDesign {
    #[serde(default)]
    request: Option<DesignRequest>,
    /// A scene-graph document to solve without the agents.
    #[serde(default)]
    graph: Option<Value>,
    #[serde(default)]
    seed: Option<u64>,
}

async fn create_design(State(s): State<Arc<AppState>>, body: Result<Json<CreateDesign>, JsonRejection>) -> Response {
    let Json(body) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    let mut settings = s.config.settings();
    if let Some(seed) = body.seed {
        settings.solver.seed = seed;
    }
    let (bundle, from, kind) = match (body.request, body.graph) {
        (Some(request), None) => {
            if let Err(e) = s.services.require_backend() {
                return cli_error(e);
            }
            if let Err(e) = request.validate() {
                return error(StatusCode::BAD_REQUEST, e);
            }
            (new_design(&request, &settings), BundleStage::Designer, JobKind::Design)
        }
        (None, Some(graph)) => match new_solve(&graph, &settings) {
            Ok(b) => (b, BundleStage::SolveLayout, JobKind::Solve),
            Err(e) => return error(StatusCode::BAD_REQUEST, e),
        },
        _ => return error(StatusCode::BAD_REQUEST, "give exactly one of \"request\" and \"graph\""),
    };
    let id = design_id(&bundle);
    let job = s.enqueue(id.clone(), kind, move |state| {
        let mut bundle = bundle;
        run_stages(&mut bundle, from, &state.services.ctx())?;
        let dir = store_new(&bundle, &state.config.out_root)?;
        Ok(RunOutcome {
            dir,
            status: bundle.status,
            failure: bundle.failure,
        })
    });
    (
        StatusCode::ACCEPTED,
        [(header::LOCATION, format!("/designs/{id}"))],
        Json(job),
    )
        .into_response()
}

#[derive(Debug, Default, Deserialize)]
struct VersionQuery {
    version: Option<u32>,
}

/// The version directory a read refers to, or an error response.
fn version_for(s: &AppState, id: &str, version: Option<u32>) -> Result<PathBuf, Response> {
    if !valid_design_id(id) {
        return Err(error(StatusCode::NOT_FOUND, format!("no design {id}")));
    }
    let design = s.design_dir(id);
    let v = match version {
        Some(v) => v,
        None => next_version(&design).map_err(|e| error(StatusCode::INTERNAL_SERVER_ERROR, e))? - 1,
    };
    let dir = version_dir(&design, v);
    if v == 0 || !dir.join(INDEX_FILE).is_file() {
        return Err(match (version, s.latest_job(id)) {
            (None, Some(job)) if job.status == JobStatus::Error => {
                (StatusCode::INTERNAL_SERVER_ERROR, Json(job)).into_response()
            }
            (Some(v), _) => error(StatusCode::NOT_FOUND, format!("design {id} has no version {v}")),
            _ => error(StatusCode::NOT_FOUND, format!("no design {id}")),
        });
    }
    Ok(dir)
}

async fn get_design(
    State(s): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<VersionQuery>,
) -> Response {
    if q.version.is_none() {
        if let Some(job) = s.latest_job(&id) {
            if matches!(job.status, JobStatus::Queued | JobStatus::Running) {
                return (StatusCode::ACCEPTED, Json(job)).into_response();
            }
        }
    }
    match version_for(&s, &id, q.version) {
        Ok(dir) => file_response(&dir, INDEX_FILE).await,
        Err(r) => r,
    }
}

async fn artifact(
    State(s): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<VersionQuery>,
    name: &'static str,
) -> Response {
    match version_for(&s, &id, q.version) {
        Ok(dir) => file_response(&dir, name).await,
        Err(r) => r,
    }
}

async fn file_response(dir: &Path, name: &str) -> Response {
    let content_type = if name.ends_with(".svg") { "image/svg+xml" } else { "application/json" };
    match tokio::fs::read(dir.join(name)).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type)], bytes).into_response(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            error(StatusCode::NOT_FOUND, format!("this version has no {name}"))
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReplayBody {
    stage: String,
    #[serde(default)]
    overrides: ReplayOverrides,
    /// Source version; the latest when absent.
    #[serde(default)]
    version: Option<u32>,
}

async fn replay(
    State(s): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<ReplayBody>, JsonRejection>,
) -> Response {
    let Json(body) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    let Some(stage) = BundleStage::parse(&body.stage) else {
        return error(StatusCode::BAD_REQUEST, ComposeError::UnknownStage(body.stage));
    };
    if body.overrides.graph.is_some() && stage < BundleStage::SolveLayout {
        return error(
            StatusCode::BAD_REQUEST,
            "a graph override needs a replay from solve_layout or later",
        );
    }
    if stage.agent().is_some() {
        if let Err(e) = s.services.require_backend() {
            return cli_error(e);
        }
    }
    let source = match version_for(&s, &id, body.version) {
        Ok(dir) => dir,
        Err(r) => return r,
    };
    if let Err(e) = read_index(&source) {
        return error(StatusCode::INTERNAL_SERVER_ERROR, e);
    }
    let overrides = body.overrides;
    let job = s.enqueue(id.clone(), JobKind::Replay, move |state| {
        commands::replay(&state.services, &source, stage.as_str(), &overrides)
    });
    (
        StatusCode::ACCEPTED,
        [(header::LOCATION, format!("/jobs/{}", job.job))],
        Json(job),
    )
        .into_response()
}

async fn get_job(State(s): State<Arc<AppState>>, UrlPath(job): UrlPath<String>) -> Response {
    match s.job(&job) {
        Some(j) => Json(j).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("no job {job}")),
    }
}

#[derive(Debug, Deserialize)]
struct SearchQuery {
    #[serde(default)]
    q: String,
    #[serde(default = "default_k")]
    k: usize,
}

fn default_k() -> usize {
    5
}

async fn search(State(s): State<Arc<AppState>>, Query(q): Query<SearchQuery>) -> Response {
    let Some(index) = s.services.index.clone() else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "no asset index configured");
    };
    let embedder = Arc::clone(&s.services.embedder);
    let query = q.q.clone();
    let k = q.k;
    let hits = tokio::task::spawn_blocking(move || commands::search(&index, embedder.as_ref(), &query, k)).await;
    match hits {
        Ok(Ok(hits)) => Json(json!({"query": q.q, "k": q.k, "hits": hits})).into_response(),
        Ok(Err(e)) => cli_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_ids() {
        assert!(valid_design_id("d0123456789ab"));
        assert!(!valid_design_id("d0123456789aB"));
        assert!(!valid_design_id("d0123456789a"));
        assert!(!valid_design_id("../etc/passwd"));
        assert!(!valid_design_id("x0123456789ab"));
    }
}
