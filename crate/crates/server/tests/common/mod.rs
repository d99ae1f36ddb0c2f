#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::net::SocketAddr;
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::Arc;

use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

/// A running `reasonchat serve`, killed on drop.
pub struct Server {
    pub child: Child,
    pub base: String,
}

impl Server {
    pub fn start(log_dir: Option<&Path>, extra: &[&str], env: &[(&str, &str)]) -> Self {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_reasonchat"));
        cmd.args(extra).args(["serve", "--addr", "127.0.0.1:0"]);
        if let Some(dir) = log_dir {
            cmd.arg("--log-dir").arg(dir);
        }
        cmd.env("RUST_LOG", "error").envs(env.iter().copied()).stdout(Stdio::piped()).stderr(Stdio::inherit());
        let mut child = cmd.spawn().expect("server binary starts");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let base = line
            .split_whitespace()
            .find(|w| w.starts_with("http://"))
            .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
            .to_string();
        Self { child, base }
    }

    /// SIGKILL, no chance to flush anything.
    pub fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub fn client() -> reqwest::blocking::Client {
        reqwest::blocking::Client::builder().timeout(std::time::Duration::from_secs(30)).build().unwrap()
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        let r = Self::client().get(self.url(path)).send().unwrap();
        (r.status().as_u16(), r.json().unwrap_or(Value::Null))
    }

    pub fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = Self::client().post(self.url(path)).json(&body).send().unwrap();
        (r.status().as_u16(), r.json().unwrap_or(Value::Null))
    }

    pub fn create(&self, task: &str, seed: u64) -> String {
        let (status, body) = self.post("/v1/sessions", json!({ "task": task, "backend": "mock", "seed": seed }));
        assert_eq!(status, 201, "{body}");
        body["id"].as_str().unwrap().to_string()
    }

    pub fn say(&self, id: &str, text: &str) -> Value {
        let (status, body) = self.post(&format!("/v1/sessions/{id}/messages"), json!({ "text": text }));
        assert_eq!(status, 200, "{body}");
        body
    }

    pub fn digest(&self, id: &str) -> String {
        let (status, body) = self.get(&format!("/v1/sessions/{id}/state"));
        assert_eq!(status, 200, "{body}");
        body["digest"].as_str().unwrap().to_string()
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub type Reply = dyn Fn(&HeaderMap, &Value) -> Response + Send + Sync;

pub fn completion(text: &str) -> Response {
    Json(json!({ "choices": [{ "message": { "role": "assistant", "content": text } }] })).into_response()
}

pub fn unavailable(retry_after: u64) -> Response {
    (StatusCode::SERVICE_UNAVAILABLE, [("retry-after", retry_after.to_string())], "busy").into_response()
}

/// Chat-completions stand-in on a local port.
pub fn stub(reply: Arc<Reply>) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(1).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            let handler = move |headers: HeaderMap, Json(body): Json<Value>| {
                let reply = reply.clone();
                async move { reply(&headers, &body) }
            };
            let app = Router::new().route("/v1/chat/completions", post(handler));
            axum::serve(listener, app).await.unwrap();
        });
    });
    rx.recv().unwrap()
}
