#![allow(dead_code)]

use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use oht_service::api::EPOCH_HEADER;
use oht_service::{router, startup, AppState, Config};
use serde_json::Value;
use tower::ServiceExt;

pub fn demo_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("demo/corpus")
}

pub fn demo_state(data_dir: &Path) -> AppState {
    startup(Config::new(demo_corpus(), data_dir)).expect("demo corpus starts")
}

pub struct Reply {
    pub status: StatusCode,
    pub epoch: u64,
    pub body: Value,
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let mut builder = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            builder = builder.header("content-type", "application/json");
            Body::from(serde_json::to_vec(&v).unwrap())
        }
        None => Body::empty(),
    };
    let response = app.clone().oneshot(builder.body(body).unwrap()).await.unwrap();
    let status = response.status();
    let epoch = response
        .headers()
        .get(EPOCH_HEADER)
        .expect("epoch header on every response")
        .to_str()
        .unwrap()
        .parse()
        .unwrap();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    Reply { status, epoch, body }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None).await
}

pub async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, Method::POST, uri, Some(body)).await
}

pub fn app(state: &AppState) -> Router {
    router(state.clone())
}

pub fn hit_ids(search: &Value) -> Vec<String> {
    search["hits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|h| h["interview_id"].as_str().unwrap().to_string())
        .collect()
}
