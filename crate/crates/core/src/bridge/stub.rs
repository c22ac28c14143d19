//! A loopback chat-completions server for tests and offline runs.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value as Json};

pub type Responder = Box<dyn Fn(&Json) -> (u16, String) + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub struct CapturedRequest {
    pub path: String,
    pub body: Json,
    /// Whether an Authorization header arrived; its value is not kept.
    pub had_auth: bool,
}

pub struct StubServer {
    addr: SocketAddr,
    server: Arc<tiny_http::Server>,
    handle: Option<JoinHandle<()>>,
    requests: Arc<Mutex<Vec<CapturedRequest>>>,
}

/// A minimal successful chat-completions body.
pub fn chat_response(content: &str) -> String {
    json!({
        "id": "stub",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0},
    })
    .to_string()
}

/// The user message of a chat request.
pub fn prompt_of(request: &Json) -> &str {
    request["messages"][0]["content"].as_str().unwrap_or("")
}

/// Always answers with `content`.
pub fn canned(content: &str) -> Responder {
    let body = chat_response(content);
    Box::new(move |_| (200, body.clone()))
}

/// Plays `script` in order, repeating the last entry once exhausted.
pub fn scripted(script: Vec<(u16, String)>) -> Responder {
    let next = AtomicUsize::new(0);
    Box::new(move |_| {
        let i = next.fetch_add(1, Ordering::SeqCst).min(script.len().saturating_sub(1));
        script.get(i).cloned().unwrap_or((500, "empty script".into()))
    })
}

/// Answers each prompt with the fenced code registered for the longest
/// instruction document the prompt contains; 404 when none matches.
pub fn ground_truth(answers: BTreeMap<String, String>) -> Responder {
    Box::new(move |req| {
        let prompt = prompt_of(req);
        let best = answers
            .iter()
            .filter(|(doc, _)| prompt.contains(doc.as_str()))
            .max_by_key(|(doc, _)| doc.len());
        match best {
            Some((_, code)) => (200, chat_response(&format!("```python\n{code}```\n"))),
            None => (404, json!({"error": {"message": "unknown prompt"}}).to_string()),
        }
    })
}

impl StubServer {
    /// Listens on an ephemeral loopback port.
    pub fn start(responder: Responder) -> std::io::Result<Self> {
        Self::start_on("127.0.0.1:0", responder)
    }

    pub fn start_on(addr: &str, responder: Responder) -> std::io::Result<Self> {
        let server = Arc::new(tiny_http::Server::http(addr).map_err(std::io::Error::other)?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("stub is not on an IP socket"))?;
        let requests = Arc::new(Mutex::new(Vec::new()));
        let (srv, log) = (server.clone(), requests.clone());
        let handle = std::thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                let mut text = String::new();
                let _ = req.as_reader().read_to_string(&mut text);
                let body: Json = serde_json::from_str(&text).unwrap_or(Json::Null);
                let had_auth = req.headers().iter().any(|h| h.field.equiv("Authorization"));
                let (status, reply) = responder(&body);
                log.lock().unwrap_or_else(|e| e.into_inner()).push(CapturedRequest {
                    path: req.url().to_string(),
                    body,
                    had_auth,
                });
                let header = tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header");
                let _ = req.respond(tiny_http::Response::from_string(reply).with_status_code(status).with_header(header));
            }
        });
        Ok(StubServer {
            addr,
            server,
            handle: Some(handle),
            requests,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn requests(&self) -> Vec<CapturedRequest> {
        self.requests.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Serves until the process ends.
    pub fn join(mut self) {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
