//! JSON-over-HTTP service. Field names are documented in `docs/wire-format.md`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;

use super::store::{contract_id, load_session, new_session_id, save_session, FileStore, StoreError};
use crate::error::{EngineError, MonitorError};
use crate::explorer::{expand, what_if, ScenarioNode, WhatIf};
use crate::lang::{check_source, Diagnostic};
use crate::monitor::{ActiveNorm, Session, TransitionRecord};
use crate::norm::{ContractSpec, ContractState, Event, TerminalClass, Time};
use crate::space::{analyze, build_graph, export_dot, export_structured_graph};

/// Deepest scenario tree the service will build.
pub const MAX_EXPLORE_DEPTH: usize = 8;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    diagnostics: Vec<Diagnostic>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            diagnostics: Vec::new(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_request", message)
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} `{id}`"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "error": { "code": self.code, "message": self.message },
            "diagnostics": self.diagnostics,
        });
        (self.status, Json(body)).into_response()
    }
}

impl From<MonitorError> for ApiError {
    fn from(e: MonitorError) -> Self {
        let (status, code) = match &e {
            MonitorError::StaleTimestamp { .. } => (StatusCode::CONFLICT, "stale_timestamp"),
            MonitorError::Terminated { .. } => (StatusCode::CONFLICT, "session_terminated"),
            MonitorError::Engine(EngineError::TerminalState { .. }) => {
                (StatusCode::CONFLICT, "session_terminated")
            }
            MonitorError::UnexpectedEvent { .. } => {
                (StatusCode::UNPROCESSABLE_ENTITY, "unexpected_event")
            }
            MonitorError::MalformedEvent { .. } => (StatusCode::BAD_REQUEST, "malformed_event"),
            MonitorError::ReplayMismatch { .. } | MonitorError::Engine(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "engine_error")
            }
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match e {
            EngineError::StateBoundExceeded { .. } | EngineError::InvalidSpec(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, "engine_error", e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(id) => ApiError::not_found("id", &id),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store_error", other.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Contract {
    source: String,
    spec: Arc<ContractSpec>,
}

struct LiveSession {
    id: String,
    contract_id: String,
    session: Session,
    /// Responses already given, by idempotency key.
    replies: HashMap<String, Value>,
}

/// Shared service state. Contracts are immutable once stored; each session
/// sits behind its own lock so requests to one session are serialised while
/// different sessions proceed in parallel.
#[derive(Clone)]
pub struct AppState {
    store: FileStore,
    contracts: Arc<RwLock<HashMap<String, Arc<Contract>>>>,
    sessions: Arc<Mutex<HashMap<String, Arc<Mutex<LiveSession>>>>>,
}

impl AppState {
    pub fn new(store: FileStore) -> Self {
        AppState {
            store,
            contracts: Default::default(),
            sessions: Default::default(),
        }
    }

    fn contract(&self, id: &str) -> ApiResult<Arc<Contract>> {
        if let Some(c) = self.contracts.read().unwrap().get(id) {
            return Ok(Arc::clone(c));
        }
        let source = self
            .store
            .get_contract_source(id)
            .map_err(|_| ApiError::not_found("contract", id))?;
        let spec = check_source(&source)
            .valid_spec()
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store_error", "stored contract no longer checks"))?;
        let c = Arc::new(Contract {
            source,
            spec: Arc::new(spec),
        });
        self.contracts
            .write()
            .unwrap()
            .insert(id.to_string(), Arc::clone(&c));
        Ok(c)
    }

    async fn session(&self, id: &str) -> ApiResult<Arc<Mutex<LiveSession>>> {
        let mut map = self.sessions.lock().await;
        if let Some(s) = map.get(id) {
            return Ok(Arc::clone(s));
        }
        let stored = self.store.get_session(id).map_err(|e| match e {
            StoreError::NotFound(_) => ApiError::not_found("session", id),
            other => other.into(),
        })?;
        let session = load_session(&stored)?;
        let live = Arc::new(Mutex::new(LiveSession {
            id: id.to_string(),
            contract_id: stored.contract_id,
            session,
            replies: HashMap::new(),
        }));
        map.insert(id.to_string(), Arc::clone(&live));
        Ok(live)
    }

    fn persist(&self, live: &LiveSession) -> ApiResult<()> {
        Ok(self.store.put_session(&save_session(&live.id, &live.session))?)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/contracts", post(create_contract))
        .route("/contracts/{id}", get(get_contract))
        .route("/contracts/{id}/graph", get(get_graph))
        .route("/contracts/{id}/analysis", get(get_analysis))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/events", post(post_event))
        .route("/sessions/{id}/clock", post(post_clock))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/history", get(get_history))
        .route("/sessions/{id}/explore", post(post_explore))
        .with_state(state)
}

/// Parse a JSON body ourselves so malformed input is a 400 with our error shape.
fn body<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(e.to_string()))
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Serialize)]
struct ContractCreated {
    id: String,
    name: String,
    diagnostics: Vec<Diagnostic>,
}

async fn create_contract(State(app): State<AppState>, source: String) -> ApiResult<Response> {
    let report = check_source(&source);
    let Some(spec) = report.valid_spec().cloned() else {
        let mut err = ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_contract",
            "the contract has errors",
        );
        err.diagnostics = report.diagnostics;
        return Err(err);
    };
    let id = app.store.put_contract(&spec)?;
    let name = spec.name.clone();
    app.contracts.write().unwrap().insert(
        id.clone(),
        Arc::new(Contract {
            source: crate::lang::pretty_print(&spec),
            spec: Arc::new(spec),
        }),
    );
    let created = ContractCreated {
        id,
        name,
        diagnostics: report.diagnostics,
    };
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn get_contract(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let c = app.contract(&id)?;
    Ok(Json(json!({ "id": id, "name": c.spec.name, "source": c.source })))
}

#[derive(Deserialize)]
struct GraphQuery {
    format: Option<String>,
}

async fn get_graph(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<GraphQuery>,
) -> ApiResult<Response> {
    let c = app.contract(&id)?;
    let graph = build_graph(&c.spec)?;
    match q.format.as_deref().unwrap_or("structured") {
        "structured" => Ok(Json(export_structured_graph(&graph)).into_response()),
        "dot" => Ok((
            [(header::CONTENT_TYPE, "text/vnd.graphviz; charset=utf-8")],
            export_dot(&graph),
        )
            .into_response()),
        other => Err(ApiError::bad_request(format!(
            "unknown graph format `{other}`; use `dot` or `structured`"
        ))),
    }
}

async fn get_analysis(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let c = app.contract(&id)?;
    Ok(Json(analyze(&c.spec)?).into_response())
}

#[derive(Deserialize)]
struct NewSession {
    contract_id: String,
    #[serde(default)]
    epoch: Time,
}

/// What `GET /sessions/{id}/state` returns.
#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub contract_id: String,
    pub epoch: Time,
    pub clock: Time,
    pub key: String,
    pub terminated: Option<TerminalClass>,
    pub norms: Vec<NormView>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NormView {
    pub text: String,
    #[serde(flatten)]
    pub norm: ActiveNorm,
}

fn view(live: &LiveSession) -> SessionView {
    let s = &live.session;
    SessionView {
        id: live.id.clone(),
        contract_id: live.contract_id.clone(),
        epoch: s.epoch(),
        clock: s.clock(),
        key: s.state().canonical_key(),
        terminated: s.state().terminal_class(),
        norms: s
            .active_norms()
            .into_iter()
            .map(|norm| NormView {
                text: norm.atom.to_string(),
                norm,
            })
            .collect(),
    }
}

async fn create_session(State(app): State<AppState>, bytes: axum::body::Bytes) -> ApiResult<Response> {
    let req: NewSession = body(&bytes)?;
    let c = app.contract(&req.contract_id)?;
    debug_assert_eq!(contract_id(&c.spec), req.contract_id);
    let session = Session::open(Arc::clone(&c.spec), req.epoch)?;
    let live = LiveSession {
        id: new_session_id(),
        contract_id: req.contract_id,
        session,
        replies: HashMap::new(),
    };
    app.persist(&live)?;
    let v = view(&live);
    app.sessions
        .lock()
        .await
        .insert(live.id.clone(), Arc::new(Mutex::new(live)));
    Ok((StatusCode::CREATED, Json(v)).into_response())
}

#[derive(Serialize)]
struct Applied {
    records: Vec<TransitionRecord>,
    state: SessionView,
}

fn idempotency_key(headers: &HeaderMap) -> Option<String> {
    headers
        .get("idempotency-key")
        .and_then(|v| v.to_str().ok())
        .map(str::to_string)
}

/// Run a mutation under the session lock, persisting the result (including
/// rejections) and remembering the reply under the idempotency key.
async fn mutate(
    app: &AppState,
    id: &str,
    headers: &HeaderMap,
    op: impl FnOnce(&mut Session) -> Result<Vec<TransitionRecord>, MonitorError>,
) -> ApiResult<Json<Value>> {
    let live = app.session(id).await?;
    let mut live = live.lock().await;
    let key = idempotency_key(headers);
    if let Some(reply) = key.as_ref().and_then(|k| live.replies.get(k)) {
        return Ok(Json(reply.clone()));
    }
    let outcome = op(&mut live.session);
    app.persist(&live)?;
    let records = outcome?;
    let reply = serde_json::to_value(Applied {
        records,
        state: view(&live),
    })
    .expect("wire types serialise");
    if let Some(k) = key {
        live.replies.insert(k, reply.clone());
    }
    Ok(Json(reply))
}

async fn post_event(
    State(app): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    bytes: axum::body::Bytes,
) -> ApiResult<Json<Value>> {
    let event: Event = body(&bytes)?;
    mutate(&app, &id, &headers, |s| s.submit_event(event)).await
}

#[derive(Deserialize)]
struct ClockRequest {
    to: Time,
}

async fn post_clock(
    State(app): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    bytes: axum::body::Bytes,
) -> ApiResult<Json<Value>> {
    let req: ClockRequest = body(&bytes)?;
    mutate(&app, &id, &headers, |s| s.advance_clock(req.to)).await
}

async fn get_state(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let live = app.session(&id).await?;
    let live = live.lock().await;
    Ok(Json(view(&live)))
}

async fn get_history(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let live = app.session(&id).await?;
    let live = live.lock().await;
    Ok(Json(json!({
        "records": live.session.history(),
        "rejected": live.session.rejected(),
    })))
}

#[derive(Deserialize)]
struct ExploreRequest {
    depth: Option<usize>,
    events: Option<Vec<Event>>,
}

#[derive(Serialize)]
struct Explored {
    #[serde(skip_serializing_if = "Option::is_none")]
    tree: Option<ScenarioNode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    what_if: Option<WhatIf>,
}

async fn post_explore(
    State(app): State<AppState>,
    Path(id): Path<String>,
    bytes: axum::body::Bytes,
) -> ApiResult<Json<Explored>> {
    let req: ExploreRequest = body(&bytes)?;
    if req.depth.is_none() && req.events.is_none() {
        return Err(ApiError::bad_request("give `depth`, `events`, or both"));
    }
    if req.depth.is_some_and(|d| d > MAX_EXPLORE_DEPTH) {
        return Err(ApiError::bad_request(format!(
            "depth is limited to {MAX_EXPLORE_DEPTH}"
        )));
    }
    let live = app.session(&id).await?;
    let live = live.lock().await;
    let s = &live.session;
    let state: &ContractState = s.state();
    Ok(Json(Explored {
        tree: req.depth.map(|d| expand(s.spec(), state, d)),
        what_if: req.events.map(|evs| what_if(s, &evs)),
    }))
}

/// Bind and serve until interrupted.
pub async fn serve(addr: std::net::SocketAddr, store: FileStore) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, data_dir = %store.root().display(), "listening");
    axum::serve(listener, router(AppState::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
