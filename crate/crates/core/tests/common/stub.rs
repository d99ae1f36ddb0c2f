//! A chat-completions endpoint on a local port, run on its own runtime.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

pub type Reply = dyn Fn(&HeaderMap, &[(String, String)]) -> Response + Send + Sync;

pub fn completion(text: &str) -> Response {
    Json(json!({ "choices": [{ "message": { "role": "assistant", "content": text } }] })).into_response()
}

pub fn unavailable(retry_after: u64) -> Response {
    (StatusCode::SERVICE_UNAVAILABLE, [("retry-after", retry_after.to_string())], "busy").into_response()
}

async fn handle(State(reply): State<Arc<Reply>>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    let messages: Vec<(String, String)> = body["messages"]
        .as_array()
        .map(|a| {
            a.iter()
                .map(|m| (m["role"].as_str().unwrap_or("").to_string(), m["content"].as_str().unwrap_or("").to_string()))
                .collect()
        })
        .unwrap_or_default();
    reply(&headers, &messages)
}

/// Serves `reply` at `http://<addr>/v1/chat/completions` until the process exits.
pub fn spawn(reply: Arc<Reply>) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(1).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            let app = Router::new().route("/v1/chat/completions", post(handle)).with_state(reply);
            axum::serve(listener, app).await.unwrap();
        });
    });
    rx.recv().unwrap()
}
