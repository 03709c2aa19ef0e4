//! HTTP contract of the stepping service, driven in-process.

use std::path::PathBuf;
use std::time::Duration;

use aeff::explore::{chooser, load_source, RunOptions, Strategy};
use aeff_server::{router, AppState, ServerConfig};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

fn corpus(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(format!("{name}.aeff"));
    std::fs::read_to_string(p).unwrap()
}

fn app() -> Router {
    router(AppState::new(ServerConfig::default()))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

async fn create(app: &Router, src: &str) -> Value {
    let (st, v) = call(app, Method::POST, "/sessions", Some(json!({ "source": src }))).await;
    assert_eq!(st, StatusCode::CREATED, "{v}");
    v
}

async fn step(app: &Router, id: &str, redex: &str) -> (StatusCode, Value) {
    call(app, Method::POST, &format!("/sessions/{id}/step"), Some(json!({ "redexId": redex }))).await
}

fn first_redex(v: &Value) -> String {
    v["redexes"][0]["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn create_returns_a_full_view() {
    let app = app();
    let v = create(&app, &corpus("request")).await;
    for key in ["id", "prettyProcess", "processTree", "redexes", "isResult"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["isResult"], false);
    let r = &v["redexes"][0];
    for key in ["id", "rule", "path", "description"] {
        assert!(r.get(key).is_some(), "redex missing {key}");
    }
}

#[tokio::test]
async fn bad_sources_are_rejected_with_diagnostics() {
    let app = app();
    let (st, v) = call(&app, Method::POST, "/sessions", Some(json!({ "source": "run (" }))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(v["detail"]["stage"], "parse");
    let (st, v) = call(&app, Method::POST, "/sessions", Some(json!({ "source": corpus("modal_box_escape") }))).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(v["detail"]["stage"], "type");
    // Without effect checking the same program loads.
    let body = json!({ "source": corpus("request"), "options": { "noEffects": true } });
    let (st, _) = call(&app, Method::POST, "/sessions", Some(body)).await;
    assert_eq!(st, StatusCode::CREATED);
}

#[tokio::test]
async fn unknown_and_deleted_sessions_are_404() {
    let app = app();
    let (st, _) = call(&app, Method::GET, "/sessions/nope", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, _) = step(&app, "nope", "0:0").await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let v = create(&app, &corpus("trivial")).await;
    let id = v["id"].as_str().unwrap();
    let (st, _) = call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await;
    assert_eq!(st, StatusCode::NO_CONTENT);
    let (st, _) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, _) = call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn stale_redex_ids_conflict() {
    let app = app();
    let v = create(&app, &corpus("request")).await;
    let id = v["id"].as_str().unwrap();
    let old = first_redex(&v);
    let (st, _) = step(&app, id, &old).await;
    assert_eq!(st, StatusCode::OK);
    let (st, e) = step(&app, id, &old).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(e["error"], "StaleRedex");
    let (st, _) = step(&app, id, "garbage").await;
    assert_eq!(st, StatusCode::CONFLICT);
}

#[tokio::test]
async fn bad_injections_are_unprocessable() {
    let app = app();
    let v = create(&app, &corpus("multithreading")).await;
    let id = v["id"].as_str().unwrap();
    let uri = format!("/sessions/{id}/inject");
    let (st, e) = call(&app, Method::POST, &uri, Some(json!({ "op": "stop", "payload": "1 +" }))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(e["error"], "PayloadParseError");
    let (st, e) = call(&app, Method::POST, &uri, Some(json!({ "op": "nosuch", "payload": "1" }))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(e["error"], "InjectRejected");
    let (st, _) = call(&app, Method::POST, &uri, Some(json!({ "op": "stop", "payload": "true" }))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    // Nothing was recorded.
    let (_, now) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(now["historyDepth"], 0);
}

#[tokio::test]
async fn undo_restores_and_empty_history_conflicts() {
    let app = app();
    let v = create(&app, &corpus("request")).await;
    let id = v["id"].as_str().unwrap();
    let undo = format!("/sessions/{id}/undo");
    let (st, e) = call(&app, Method::POST, &undo, None).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(e["error"], "EmptyHistory");
    let mut hashes = vec![v["canonicalHash"].clone()];
    let mut cur = v.clone();
    for _ in 0..3 {
        let (st, next) = step(&app, id, &first_redex(&cur)).await;
        assert_eq!(st, StatusCode::OK);
        hashes.push(next["canonicalHash"].clone());
        cur = next;
    }
    for expect in hashes.iter().rev().skip(1) {
        let (st, back) = call(&app, Method::POST, &undo, None).await;
        assert_eq!(st, StatusCode::OK);
        assert_eq!(&back["canonicalHash"], expect);
    }
    let (_, back) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(back["prettyProcess"], v["prettyProcess"]);
    assert_eq!(back["redexes"], v["redexes"]);
}

#[tokio::test]
async fn get_is_idempotent() {
    let app = app();
    let v = create(&app, &corpus("nonconfluence")).await;
    let uri = format!("/sessions/{}", v["id"].as_str().unwrap());
    let (_, a) = call(&app, Method::GET, &uri, None).await;
    let (_, b) = call(&app, Method::GET, &uri, None).await;
    assert_eq!(a, b);
    assert_eq!(a["redexes"], v["redexes"]);
}

#[tokio::test]
async fn history_is_capped() {
    let app = router(AppState::new(ServerConfig { history_cap: 2, ..Default::default() }));
    let v = create(&app, &corpus("request")).await;
    let id = v["id"].as_str().unwrap();
    let mut cur = v.clone();
    for _ in 0..4 {
        cur = step(&app, id, &first_redex(&cur)).await.1;
    }
    assert_eq!(cur["historyDepth"], 2);
}

#[tokio::test]
async fn idle_sessions_expire() {
    let state = AppState::new(ServerConfig { idle: Duration::from_millis(20), ..Default::default() });
    let app = router(state.clone());
    let v = create(&app, &corpus("trivial")).await;
    tokio::time::sleep(Duration::from_millis(50)).await;
    state.expire().await;
    let (st, _) = call(&app, Method::GET, &format!("/sessions/{}", v["id"].as_str().unwrap()), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

/// Random walks: the menu is empty exactly at results, every listed redex
/// steps successfully, and no violation is ever reported.
#[tokio::test]
async fn menus_stay_consistent_on_random_walks() {
    let app = app();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for name in ["nonconfluence", "request", "multithreading", "remotecall", "postprocess"] {
        for _ in 0..4 {
            let mut cur = create(&app, &corpus(name)).await;
            let id = cur["id"].as_str().unwrap().to_string();
            for _ in 0..60 {
                let menu = cur["redexes"].as_array().unwrap().clone();
                assert_eq!(menu.is_empty(), cur["isResult"] == true, "{}", cur["prettyProcess"]);
                if menu.is_empty() {
                    break;
                }
                let pick = menu[rng.gen_range(0..menu.len())]["id"].as_str().unwrap().to_string();
                let (st, next) = step(&app, &id, &pick).await;
                assert_eq!(st, StatusCode::OK, "{next}");
                cur = next;
            }
        }
    }
}

/// Always taking the first redex reproduces the deterministic trace of the
/// library (and hence of `aeff run`).
#[tokio::test]
async fn first_redex_walk_matches_deterministic_run() {
    let app = app();
    for name in ["request", "nonconfluence", "multithreading", "postprocess"] {
        let src = corpus(name);
        let (sys, s) = load_source(&src, true).unwrap();
        let rep = sys.run(s, &RunOptions { max_steps: 200, ..Default::default() }, &mut chooser(Strategy::Deterministic));
        let mut cur = create(&app, &src).await;
        let id = cur["id"].as_str().unwrap().to_string();
        for rec in &rep.records {
            assert_eq!(cur["canonicalHash"], rec.proc_hash_before.as_str());
            assert_eq!(cur["redexes"][0]["rule"], rec.rule.as_str());
            cur = step(&app, &id, &first_redex(&cur)).await.1;
            assert_eq!(cur["canonicalHash"], rec.proc_hash_after.as_str());
        }
        assert_eq!(cur["isResult"], rep.final_state.config.is_result());
    }
}

/// Threads without a scheduler, driven from outside: a `stop 1` sent
/// before anything runs pauses thread 1 until `go 1` arrives, while thread 2
/// ignores it and prints straight away.
#[tokio::test]
async fn external_stop_and_go_drive_a_thread() {
    let src = corpus("multithreading");
    let src = src.split("\n|| run (send stop").next().unwrap().to_string() + "\n";
    let app = app();
    let v = create(&app, &src).await;
    let id = v["id"].as_str().unwrap().to_string();
    let inject = format!("/sessions/{id}/inject");
    let drain = |mut cur: Value| {
        let app = app.clone();
        let id = id.clone();
        async move {
            let mut outs = vec![];
            while !cur["redexes"].as_array().unwrap().is_empty() {
                cur = step(&app, &id, &first_redex(&cur)).await.1;
                if let Some(sig) = cur["lastAction"].get("emittedSignal").filter(|s| !s.is_null()) {
                    outs.push(format!("{}({})", sig["op"].as_str().unwrap(), sig["payload"].as_str().unwrap()));
                }
            }
            (cur, outs)
        }
    };
    let (st, cur) = call(&app, Method::POST, &inject, Some(json!({ "op": "stop", "payload": "1" }))).await;
    assert_eq!(st, StatusCode::OK, "{cur}");
    let (cur, outs) = drain(cur).await;
    assert_eq!(outs, ["out(21)", "out(22)"], "{}", cur["prettyProcess"]);
    // A thread blocked on its go promise is a result: nothing can step.
    assert!(cur["prettyProcess"].as_str().unwrap().contains("await p"), "{}", cur["prettyProcess"]);
    let (st, cur) = call(&app, Method::POST, &inject, Some(json!({ "op": "go", "payload": "1" }))).await;
    assert_eq!(st, StatusCode::OK);
    let (cur, outs) = drain(cur).await;
    assert_eq!(outs, ["out(11)", "out(12)"]);
    assert_eq!(cur["isResult"], true);
}

#[tokio::test]
async fn concurrent_steps_on_one_session_serialize() {
    let app = app();
    let v = create(&app, &corpus("request")).await;
    let id = v["id"].as_str().unwrap().to_string();
    let redex = first_redex(&v);
    let tasks: Vec<_> = (0..8)
        .map(|_| {
            let (app, id, redex) = (app.clone(), id.clone(), redex.clone());
            tokio::spawn(async move { step(&app, &id, &redex).await.0 })
        })
        .collect();
    let mut ok = 0;
    for t in tasks {
        match t.await.unwrap() {
            StatusCode::OK => ok += 1,
            s => assert_eq!(s, StatusCode::CONFLICT),
        }
    }
    assert_eq!(ok, 1, "exactly one request wins the redex");
}
