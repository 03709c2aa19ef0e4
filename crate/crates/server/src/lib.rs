//! Session-based JSON-over-HTTP stepping service.
//!
//! Each session holds a running configuration, its process type and an
//! undo history. Mutations of one session are serialized by a per-session
//! async mutex, so concurrent requests to the same session queue up rather
//! than fail. Idle sessions expire.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use aeff::ast::{Comp, Proc};
use aeff::explore::{hex, load_source, State, StepFailure, System};
use aeff::step::{child, Frame, Redex};
use aeff::surface::{parse_value, print_comp, print_proc, print_value};
use axum::extract::{Path, State as AxState};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::Rng;
use serde::Deserialize;
use serde_json::{json, Value as Json_};

#[derive(Clone, Copy, Debug)]
pub struct ServerConfig {
    pub history_cap: usize,
    pub idle: Duration,
}

impl Default for ServerConfig {
    fn default() -> ServerConfig {
        ServerConfig { history_cap: 10_000, idle: Duration::from_secs(30 * 60) }
    }
}

#[derive(Clone, Debug)]
enum Action {
    Step(Redex),
    Inject { op: String, payload: String },
}

struct Session {
    sys: System,
    state: State,
    history: Vec<(Action, State)>,
    last: Option<Json_>,
    touched: Instant,
}

type Shared = Arc<tokio::sync::Mutex<Session>>;

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, Shared>>>,
    config: ServerConfig,
}

impl AppState {
    pub fn new(config: ServerConfig) -> AppState {
        AppState { sessions: Arc::default(), config }
    }

    fn get(&self, id: &str) -> Option<Shared> {
        self.sessions.lock().expect("session table").get(id).cloned()
    }

    /// Drops sessions idle for longer than the configured limit.
    pub async fn expire(&self) {
        let all: Vec<(String, Shared)> =
            self.sessions.lock().expect("session table").iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        for (id, s) in all {
            if s.lock().await.touched.elapsed() > self.config.idle {
                self.sessions.lock().expect("session table").remove(&id);
            }
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(read).delete(remove))
        .route("/sessions/{id}/step", post(step))
        .route("/sessions/{id}/inject", post(inject))
        .route("/sessions/{id}/undo", post(undo))
        .with_state(state)
}

pub async fn serve(port: u16) -> std::io::Result<()> {
    let state = AppState::new(ServerConfig::default());
    let sweeper = state.clone();
    tokio::spawn(async move {
        loop {
            tokio::time::sleep(Duration::from_secs(60)).await;
            sweeper.expire().await;
        }
    });
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    eprintln!("listening on http://127.0.0.1:{port}");
    axum::serve(listener, router(state)).await
}

fn error(status: StatusCode, kind: &str, detail: impl serde::Serialize) -> Response {
    (status, Json(json!({ "error": kind, "detail": detail }))).into_response()
}

fn not_found(id: &str) -> Response {
    error(StatusCode::NOT_FOUND, "UnknownSession", id)
}

/// Redex ids pin the configuration they were computed for, so a step
/// against a changed session is detected as stale.
fn redex_id(hash: u64, k: usize) -> String {
    format!("{}:{k}", hex(hash))
}

fn view(id: &str, s: &Session) -> Json_ {
    let c = &s.state.config;
    let hash = c.hash();
    let redexes: Vec<Json_> = c
        .redexes()
        .iter()
        .enumerate()
        .map(|(k, r)| json!({ "id": redex_id(hash, k), "rule": r.rule, "path": r.path, "description": r.description }))
        .collect();
    json!({
        "id": id,
        "prettyProcess": print_proc(&c.proc),
        "processTree": proc_tree(&c.proc),
        "redexes": redexes,
        "isResult": c.is_result(),
        "canonicalHash": hex(hash),
        "type": s.state.ty.as_ref().map(|t| t.to_string()),
        "historyDepth": s.history.len(),
        "lastAction": s.last,
    })
}

/// The process as a tree of nodes with kinds and printed fragments. The
/// children of a computation node are its evaluation-context positions,
/// labelled with the same frames that redex paths use.
pub fn proc_tree(p: &Proc) -> Json_ {
    match p {
        Proc::Run(m) => json!({ "kind": "run", "pretty": print_proc(p), "computation": comp_tree(m) }),
        Proc::Par(a, b) => json!({ "kind": "par", "left": proc_tree(a), "right": proc_tree(b) }),
        Proc::Signal(op, v, q) => {
            json!({ "kind": "signal", "op": op.as_ref(), "payload": print_value(v), "body": proc_tree(q) })
        }
        Proc::Interrupt(op, v, q) => {
            json!({ "kind": "interrupt", "op": op.as_ref(), "payload": print_value(v), "body": proc_tree(q) })
        }
    }
}

fn comp_tree(m: &Comp) -> Json_ {
    let kind = match m {
        Comp::Return(_) => "return",
        Comp::Let(..) => "let",
        Comp::Apply(..) => "apply",
        Comp::MatchPair(..) | Comp::MatchEmpty(..) | Comp::MatchSum(..) => "match",
        Comp::If(..) => "if",
        Comp::Signal(..) => "signal",
        Comp::Interrupt(..) => "interrupt",
        Comp::Promise(..) => "promise",
        Comp::Await(..) => "await",
        Comp::Unbox(..) => "unbox",
        Comp::Spawn(..) => "spawn",
    };
    let children: Vec<Json_> = [Frame::Let, Frame::Signal, Frame::Interrupt, Frame::Promise, Frame::Spawn]
        .into_iter()
        .filter_map(|f| child(m, f).map(|c| json!({ "frame": f, "node": comp_tree(c) })))
        .collect();
    json!({ "kind": kind, "pretty": print_comp(m), "children": children })
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CreateBody {
    source: String,
    #[serde(default)]
    options: CreateOptions,
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct CreateOptions {
    #[serde(default)]
    no_effects: bool,
}

async fn create(AxState(app): AxState<AppState>, Json(body): Json<CreateBody>) -> Response {
    let (sys, state) = match load_source(&body.source, !body.options.no_effects) {
        Ok(x) => x,
        Err(e) => return error(StatusCode::BAD_REQUEST, "LoadError", e),
    };
    let id = format!("{:032x}", rand::thread_rng().gen::<u128>());
    let session = Session { sys, state, history: vec![], last: None, touched: Instant::now() };
    let v = view(&id, &session);
    app.sessions.lock().expect("session table").insert(id, Arc::new(tokio::sync::Mutex::new(session)));
    (StatusCode::CREATED, Json(v)).into_response()
}

async fn read(AxState(app): AxState<AppState>, Path(id): Path<String>) -> Response {
    let Some(s) = app.get(&id) else { return not_found(&id) };
    let mut s = s.lock().await;
    s.touched = Instant::now();
    Json(view(&id, &s)).into_response()
}

async fn remove(AxState(app): AxState<AppState>, Path(id): Path<String>) -> Response {
    match app.sessions.lock().expect("session table").remove(&id) {
        Some(_) => StatusCode::NO_CONTENT.into_response(),
        None => not_found(&id),
    }
}

fn push(s: &mut Session, cap: usize, action: Action, prior: State) {
    s.history.push((action, prior));
    if s.history.len() > cap {
        let extra = s.history.len() - cap;
        s.history.drain(..extra);
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct StepBody {
    redex_id: String,
}

async fn step(AxState(app): AxState<AppState>, Path(id): Path<String>, Json(body): Json<StepBody>) -> Response {
    let Some(s) = app.get(&id) else { return not_found(&id) };
    let mut s = s.lock().await;
    s.touched = Instant::now();
    let hash = s.state.config.hash();
    let redexes = s.state.config.redexes();
    let k = body
        .redex_id
        .split_once(':')
        .filter(|(h, _)| *h == hex(hash))
        .and_then(|(_, k)| k.parse::<usize>().ok())
        .filter(|k| *k < redexes.len());
    let Some(k) = k else {
        return error(StatusCode::CONFLICT, "StaleRedex", &body.redex_id);
    };
    let r = redexes[k].clone();
    let stepped = match s.sys.step(&s.state, &r, true) {
        Ok(st) => st,
        Err(StepFailure::Builtin(e)) => return error(StatusCode::UNPROCESSABLE_ENTITY, "BuiltinError", e.to_string()),
        Err(StepFailure::Step(e)) => return error(StatusCode::CONFLICT, "StaleRedex", e.to_string()),
    };
    if let Some(v) = stepped.violation {
        return error(
            StatusCode::INTERNAL_SERVER_ERROR,
            "SafetyViolation",
            json!({ "violation": v, "redex": r, "process": print_proc(&s.state.config.proc) }),
        );
    }
    let prior = std::mem::replace(&mut s.state, stepped.state);
    s.last = Some(json!({
        "kind": "step",
        "rule": r.rule,
        "path": r.path,
        "changedPath": r.path.iter().take_while(|f| **f != Frame::Run).collect::<Vec<_>>(),
        "emittedSignal": stepped.emitted,
    }));
    push(&mut s, app.config.history_cap, Action::Step(r), prior);
    Json(view(&id, &s)).into_response()
}

#[derive(Deserialize)]
struct InjectBody {
    op: String,
    payload: String,
}

async fn inject(AxState(app): AxState<AppState>, Path(id): Path<String>, Json(body): Json<InjectBody>) -> Response {
    let Some(s) = app.get(&id) else { return not_found(&id) };
    let mut s = s.lock().await;
    s.touched = Instant::now();
    let payload = match parse_value(&body.payload) {
        Ok(v) => v,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, "PayloadParseError", e.to_string()),
    };
    let next = match s.sys.inject(&s.state, &body.op, payload) {
        Ok(n) => n,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, "InjectRejected", e),
    };
    let prior = std::mem::replace(&mut s.state, next);
    s.last = Some(json!({ "kind": "inject", "op": body.op, "payload": body.payload }));
    push(&mut s, app.config.history_cap, Action::Inject { op: body.op, payload: body.payload }, prior);
    Json(view(&id, &s)).into_response()
}

async fn undo(AxState(app): AxState<AppState>, Path(id): Path<String>) -> Response {
    let Some(s) = app.get(&id) else { return not_found(&id) };
    let mut s = s.lock().await;
    s.touched = Instant::now();
    let Some((action, prior)) = s.history.pop() else {
        return error(StatusCode::CONFLICT, "EmptyHistory", &id);
    };
    s.state = prior;
    s.last = Some(match action {
        Action::Step(r) => json!({ "kind": "undo", "undid": { "kind": "step", "rule": r.rule, "path": r.path } }),
        Action::Inject { op, payload } => {
            json!({ "kind": "undo", "undid": { "kind": "inject", "op": op, "payload": payload } })
        }
    });
    Json(view(&id, &s)).into_response()
}
