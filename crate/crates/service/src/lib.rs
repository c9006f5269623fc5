//! HTTP service over a directory of annotation projects.
//!
//! Every `*.json` file in the store directory is one project. Writes carry
//! the revision they were based on; stale writes are rejected with 409.
//! Each accepted write is saved to disk before the response is sent.
//! An optional `tokens.toml` in the store maps bearer tokens to annotator
//! names:
//!
//! ```toml
//! [tokens]
//! "4f1c…" = "annotator_a"
//! ```

pub mod workflow;

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::RwLock;

use earkit::agreement::{
    agreement_report, resolve_discussion, AgreementReport, AgreementVerdict, CrossCheck, Decision,
    KappaMode, ReportOptions, Resolution,
};
use earkit::annotation::{validate_annotation, Severity};
use earkit::project::{load_project, save_project, ProjectError};
use earkit::reporting::{pattern_distribution, relation_distribution, DistributionTable};
use earkit::{Catalog, EarAnnotation, Project, RelationKey, SplitFilter, Stage};

use crate::workflow::{advance_stage, queue, QueueEntry, WorkflowError};

pub use workflow::{WorkItem, WorkStatus};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error("{path}: {source}")]
    Tokens {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("project id {0} appears in more than one file")]
    DuplicateProject(String),
}

#[derive(Deserialize)]
struct TokenFile {
    tokens: BTreeMap<String, String>,
}

struct ProjectSlot {
    path: PathBuf,
    project: RwLock<Project>,
}

/// Shared state behind the router.
#[derive(Clone)]
pub struct AppState {
    projects: Arc<BTreeMap<String, Arc<ProjectSlot>>>,
    catalog: Arc<Catalog>,
    tokens: Option<Arc<BTreeMap<String, String>>>,
}

impl AppState {
    /// Loads every project in `dir` plus an optional `tokens.toml`.
    pub fn open(dir: &Path, catalog: Catalog) -> Result<AppState, ServiceError> {
        let io = |source| ServiceError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        files.sort();
        let mut projects = BTreeMap::new();
        for path in files {
            let project = load_project(&path)?;
            let id = project.id.clone();
            let slot = Arc::new(ProjectSlot {
                path,
                project: RwLock::new(project),
            });
            if projects.insert(id.clone(), slot).is_some() {
                return Err(ServiceError::DuplicateProject(id));
            }
        }
        let token_path = dir.join("tokens.toml");
        let tokens = if token_path.exists() {
            let source = fs::read_to_string(&token_path).map_err(|source| ServiceError::Io {
                path: token_path.clone(),
                source,
            })?;
            let parsed: TokenFile = toml::from_str(&source).map_err(|source| ServiceError::Tokens {
                path: token_path.clone(),
                source,
            })?;
            Some(Arc::new(parsed.tokens))
        } else {
            None
        };
        Ok(AppState {
            projects: Arc::new(projects),
            catalog: Arc::new(catalog),
            tokens,
        })
    }

    fn slot(&self, id: &str) -> Result<&Arc<ProjectSlot>, ApiError> {
        self.projects
            .get(id)
            .ok_or_else(|| ApiError::NotFound(format!("project {id}")))
    }

    /// The caller's annotator name, or `None` when auth is disabled.
    fn identity(&self, headers: &HeaderMap) -> Result<Option<String>, ApiError> {
        let Some(tokens) = &self.tokens else {
            return Ok(None);
        };
        let token = headers
            .get(axum::http::header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or(ApiError::Unauthorized)?;
        tokens.get(token.trim()).cloned().map(Some).ok_or(ApiError::Unauthorized)
    }
}

fn require_self(identity: &Option<String>, annotator: &str) -> Result<(), ApiError> {
    match identity {
        Some(who) if who != annotator => Err(ApiError::Forbidden(format!(
            "authenticated as {who}, cannot act for {annotator}"
        ))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiDiagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
}

impl ApiDiagnostic {
    fn error(code: &str, message: impl Into<String>) -> Self {
        ApiDiagnostic {
            severity: Severity::Error,
            code: code.to_string(),
            message: message.into(),
        }
    }
}

/// Error body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default)]
    pub diagnostics: Vec<ApiDiagnostic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<u64>,
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Unauthorized,
    Forbidden(String),
    StaleRevision { expected: u64, current: u64 },
    StageClosed(String),
    Invalid(Vec<ApiDiagnostic>),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> HttpResponse {
        let (status, error, message, diagnostics, revision) = match self {
            ApiError::NotFound(what) => (StatusCode::NOT_FOUND, "not_found", format!("{what} not found"), vec![], None),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "bad_request", m, vec![], None),
            ApiError::Unauthorized => (StatusCode::UNAUTHORIZED, "unauthorized", "missing or unknown token".into(), vec![], None),
            ApiError::Forbidden(m) => (StatusCode::FORBIDDEN, "forbidden", m, vec![], None),
            ApiError::StaleRevision { expected, current } => (
                StatusCode::CONFLICT,
                "stale_revision",
                format!("write based on revision {expected}, project is at {current}"),
                vec![],
                Some(current),
            ),
            ApiError::StageClosed(m) => (StatusCode::CONFLICT, "stage_closed", m, vec![], None),
            ApiError::Invalid(d) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid", "submission failed validation".into(), d, None),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", m, vec![], None),
        };
        let body = ErrorBody {
            error: error.into(),
            message,
            diagnostics,
            revision,
        };
        (status, Json(body)).into_response()
    }
}

impl From<WorkflowError> for ApiError {
    fn from(e: WorkflowError) -> Self {
        match e {
            WorkflowError::UnknownRelation(k) => ApiError::NotFound(format!("relation {k}")),
            WorkflowError::PriorStageIncomplete { .. } => ApiError::StageClosed(e.to_string()),
            WorkflowError::Agreement(e) => ApiError::Internal(e.to_string()),
        }
    }
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    body.map(|Json(t)| t)
        .map_err(|e| ApiError::BadRequest(e.body_text()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/catalog", get(get_catalog))
        .route("/projects", get(list_projects))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/queue", get(get_queue))
        .route("/projects/{id}/annotations", post(post_annotation))
        .route("/projects/{id}/crosschecks", post(post_crosscheck))
        .route("/projects/{id}/resolutions", post(post_resolution))
        .route("/projects/{id}/report", get(get_report))
        .route("/projects/{id}/distributions", get(get_distributions))
        .with_state(state)
}

pub async fn serve(store: &Path, bind: SocketAddr, catalog: Catalog) -> Result<(), ServiceError> {
    let state = AppState::open(store, catalog)?;
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|source| ServiceError::Io {
            path: PathBuf::from(bind.to_string()),
            source,
        })?;
    axum::serve(listener, router(state))
        .await
        .map_err(|source| ServiceError::Io {
            path: PathBuf::from(bind.to_string()),
            source,
        })
}

async fn get_catalog(State(state): State<AppState>) -> Json<Vec<earkit::RhetoricalPattern>> {
    Json(state.catalog.patterns().to_vec())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectSummary {
    pub id: String,
    pub revision: u64,
    pub annotators: Vec<String>,
    pub texts: usize,
    pub relations: usize,
}

fn summary(p: &Project) -> ProjectSummary {
    ProjectSummary {
        id: p.id.clone(),
        revision: p.revision,
        annotators: p.annotators.clone(),
        texts: p.corpus.len(),
        relations: p.corpus.iter().map(|t| t.relations.len()).sum(),
    }
}

async fn list_projects(State(state): State<AppState>, headers: HeaderMap) -> Result<Json<Vec<ProjectSummary>>, ApiError> {
    state.identity(&headers)?;
    let mut out = Vec::new();
    for slot in state.projects.values() {
        out.push(summary(&*slot.project.read().await));
    }
    Ok(Json(out))
}

/// Corpus and metadata only; annotations are reached through queues so
/// Stage 1 stays blind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectView {
    pub id: String,
    pub revision: u64,
    pub rng_seed: u64,
    pub annotators: Vec<String>,
    pub corpus: Vec<earkit::Microtext>,
    pub split: BTreeMap<String, earkit::Split>,
}

async fn get_project(
    State(state): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<ProjectView>, ApiError> {
    state.identity(&headers)?;
    let p = state.slot(&id)?.project.read().await;
    Ok(Json(ProjectView {
        id: p.id.clone(),
        revision: p.revision,
        rng_seed: p.rng_seed,
        annotators: p.annotators.clone(),
        corpus: p.corpus.clone(),
        split: p.split.clone(),
    }))
}

#[derive(Debug, Deserialize)]
struct QueueQuery {
    annotator: String,
    stage: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueResponse {
    pub revision: u64,
    pub items: Vec<QueueEntry>,
}

fn parse_stage(n: u8) -> Result<Stage, ApiError> {
    Stage::try_from(n).map_err(ApiError::BadRequest)
}

async fn get_queue(
    State(state): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<QueueQuery>,
) -> Result<Json<QueueResponse>, ApiError> {
    let who = state.identity(&headers)?;
    require_self(&who, &q.annotator)?;
    let stage = parse_stage(q.stage)?;
    let p = state.slot(&id)?.project.read().await;
    if !p.annotators.contains(&q.annotator) {
        return Err(ApiError::NotFound(format!("annotator {}", q.annotator)));
    }
    Ok(Json(QueueResponse {
        revision: p.revision,
        items: queue(&p, &state.catalog, &q.annotator, stage)?,
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationSubmission {
    pub revision: u64,
    pub annotation: EarAnnotation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossCheckSubmission {
    pub revision: u64,
    pub cross_check: CrossCheck,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolutionSubmission {
    pub revision: u64,
    pub text_id: String,
    pub relation_id: String,
    pub decision: Decision,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WriteAck<T> {
    pub revision: u64,
    #[serde(flatten)]
    pub result: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationAck {
    pub warnings: Vec<ApiDiagnostic>,
    /// Items the relation spawned, if its current stage just completed.
    pub next: Vec<WorkItem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolutionAck {
    pub resolution: Resolution,
}

/// Runs `mutate` on a copy of the project under the write lock, saves it
/// and only then publishes it.
async fn write<T>(
    slot: &ProjectSlot,
    expected: u64,
    mutate: impl FnOnce(&mut Project) -> Result<T, ApiError>,
) -> Result<(u64, T), ApiError> {
    let mut guard = slot.project.write().await;
    if guard.revision != expected {
        return Err(ApiError::StaleRevision {
            expected,
            current: guard.revision,
        });
    }
    let mut next = guard.clone();
    let out = mutate(&mut next)?;
    next.revision += 1;
    let path = slot.path.clone();
    let to_save = next.clone();
    tokio::task::spawn_blocking(move || save_project(&to_save, &path))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    *guard = next;
    Ok((guard.revision, out))
}

fn diag(d: &earkit::annotation::Diagnostic) -> ApiDiagnostic {
    let code = serde_json::to_value(d.code)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    ApiDiagnostic {
        severity: d.severity,
        code,
        message: d.message.clone(),
    }
}

fn stage1_verdict(p: &Project, catalog: &Catalog, key: &RelationKey) -> Result<Option<AgreementVerdict>, ApiError> {
    let records = earkit::evaluate(p, catalog, &ReportOptions::default())
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(records
        .iter()
        .find(|r| r.key == *key)
        .and_then(|r| r.stage(Stage::One).verdict))
}

async fn post_annotation(
    State(state): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<AnnotationSubmission>, JsonRejection>,
) -> Result<Json<WriteAck<AnnotationAck>>, ApiError> {
    let sub = json_body(body)?;
    let who = state.identity(&headers)?;
    let a = sub.annotation;
    require_self(&who, &a.annotator)?;
    let catalog = state.catalog.clone();
    let (revision, ack) = write(state.slot(&id)?, sub.revision, |p| {
        if !p.annotators.contains(&a.annotator) {
            return Err(ApiError::Invalid(vec![ApiDiagnostic::error(
                "unknown_annotator",
                format!("{} is not an annotator of this project", a.annotator),
            )]));
        }
        if a.stage != Stage::One {
            return Err(ApiError::Invalid(vec![ApiDiagnostic::error(
                "stage",
                "annotations are submitted in stage 1; later stages use cross-checks and resolutions",
            )]));
        }
        let Some(text) = p.text(&a.text_id) else {
            return Err(ApiError::Invalid(vec![ApiDiagnostic::error(
                "unknown_text",
                format!("text {} is not in the project", a.text_id),
            )]));
        };
        let diagnostics = validate_annotation(&a, text, &catalog);
        if diagnostics.iter().any(|d| d.is_error()) {
            return Err(ApiError::Invalid(diagnostics.iter().map(diag).collect()));
        }
        let key = a.key();
        if stage1_verdict(p, &catalog, &key)?.is_some() {
            return Err(ApiError::StageClosed(format!(
                "{key}: both stage-1 annotations are in; stage 1 is closed"
            )));
        }
        p.upsert_annotation(a.clone());
        let next = match advance_stage(p, &catalog, &key) {
            Ok(items) => items,
            Err(WorkflowError::PriorStageIncomplete { .. }) => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(AnnotationAck {
            warnings: diagnostics.iter().map(diag).collect(),
            next,
        })
    })
    .await?;
    Ok(Json(WriteAck { revision, result: ack }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextItems {
    pub next: Vec<WorkItem>,
}

async fn post_crosscheck(
    State(state): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<CrossCheckSubmission>, JsonRejection>,
) -> Result<Json<WriteAck<NextItems>>, ApiError> {
    let sub = json_body(body)?;
    let who = state.identity(&headers)?;
    let c = sub.cross_check;
    require_self(&who, &c.annotator)?;
    let catalog = state.catalog.clone();
    let (revision, next) = write(state.slot(&id)?, sub.revision, |p| {
        let key = c.key();
        if !p.annotators.contains(&c.annotator) {
            return Err(ApiError::Invalid(vec![ApiDiagnostic::error(
                "unknown_annotator",
                format!("{} is not an annotator of this project", c.annotator),
            )]));
        }
        if p.relation_type(&key).is_none() {
            return Err(ApiError::Invalid(vec![ApiDiagnostic::error(
                "unknown_relation",
                format!("relation {key} is not in the project"),
            )]));
        }
        if stage1_verdict(p, &catalog, &key)? != Some(AgreementVerdict::Disagreed) {
            return Err(ApiError::StageClosed(format!(
                "{key}: cross-checks apply only to stage-1 disagreements"
            )));
        }
        if p.resolutions.iter().any(|r| r.key() == key) {
            return Err(ApiError::StageClosed(format!("{key}: already settled in stage 3")));
        }
        p.upsert_cross_check(c.clone());
        let next = match advance_stage(p, &catalog, &key) {
            Ok(items) => items.into_iter().filter(|i| i.stage == Stage::Three).collect(),
            Err(e) => return Err(e.into()),
        };
        Ok(NextItems { next })
    })
    .await?;
    Ok(Json(WriteAck { revision, result: next }))
}

async fn post_resolution(
    State(state): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<ResolutionSubmission>, JsonRejection>,
) -> Result<Json<WriteAck<ResolutionAck>>, ApiError> {
    let sub = json_body(body)?;
    state.identity(&headers)?;
    let catalog = state.catalog.clone();
    let (revision, ack) = write(state.slot(&id)?, sub.revision, |p| {
        let key = RelationKey::new(&sub.text_id, &sub.relation_id);
        let items = advance_stage(p, &catalog, &key)?;
        if !items.iter().any(|i| i.stage == Stage::Three) {
            return Err(ApiError::StageClosed(format!(
                "{key}: not awaiting a stage-3 discussion"
            )));
        }
        let pair: [String; 2] = match p.annotators.as_slice() {
            [a, b, ..] => [a.clone(), b.clone()],
            _ => return Err(ApiError::Internal("project needs two annotators".into())),
        };
        let resolution = resolve_discussion(&key, &sub.decision, &pair, p.rng_seed).map_err(|e| {
            ApiError::Invalid(vec![ApiDiagnostic::error("decision", e.to_string())])
        })?;
        p.upsert_resolution(resolution.clone());
        Ok(ResolutionAck { resolution })
    })
    .await?;
    Ok(Json(WriteAck { revision, result: ack }))
}

#[derive(Debug, Default, Deserialize)]
struct ReportQuery {
    split: Option<String>,
    kappa_mode: Option<KappaMode>,
}

fn parse_split(s: Option<&str>) -> Result<SplitFilter, ApiError> {
    s.map_or(Ok(SplitFilter::All), |s| s.parse().map_err(ApiError::BadRequest))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportResponse {
    pub revision: u64,
    pub report: AgreementReport,
}

async fn get_report(
    State(state): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ReportQuery>,
) -> Result<Json<ReportResponse>, ApiError> {
    state.identity(&headers)?;
    let options = ReportOptions {
        split: parse_split(q.split.as_deref())?,
        kappa_mode: q.kappa_mode.unwrap_or_default(),
        ..Default::default()
    };
    let p = state.slot(&id)?.project.read().await;
    let report = agreement_report(&p, &state.catalog, &options).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(Json(ReportResponse {
        revision: p.revision,
        report,
    }))
}

#[derive(Debug, Deserialize)]
struct DistributionQuery {
    stage: Option<u8>,
    split: Option<String>,
    per_annotator: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionResponse {
    pub revision: u64,
    pub relations: DistributionTable,
    pub patterns: DistributionTable,
}

async fn get_distributions(
    State(state): State<AppState>,
    headers: HeaderMap,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<DistributionQuery>,
) -> Result<Json<DistributionResponse>, ApiError> {
    state.identity(&headers)?;
    let stage = parse_stage(q.stage.unwrap_or(3))?;
    let split = parse_split(q.split.as_deref())?;
    let p = state.slot(&id)?.project.read().await;
    let patterns = pattern_distribution(&p, &state.catalog, stage, q.per_annotator.unwrap_or(false), split)
        .map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(Json(DistributionResponse {
        revision: p.revision,
        relations: relation_distribution(&p),
        patterns,
    }))
}
