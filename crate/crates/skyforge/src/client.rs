//! Chat-completions client with retries and a bound on in-flight requests.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};
use skyforge_core::metrics::{judge_prompt, parse_judge_reply, Judge, JudgeError};
use skyforge_core::RgbImage;
use thiserror::Error;

use crate::config::EndpointSettings;

pub const API_KEY_ENV: &str = "SKYFORGE_API_KEY";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Role {
    System,
    User,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChatMessage {
    pub role: Role,
    pub text: String,
    /// PNG images, base64 encoded.
    pub images: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub max_tokens: u32,
    pub temperature: f64,
}

impl ChatRequest {
    /// Optional system prompt plus one user turn carrying `images`.
    pub fn vision(settings: &EndpointSettings, system: Option<&str>, user: &str, images: Vec<String>) -> Self {
        let mut messages = Vec::new();
        if let Some(s) = system {
            messages.push(ChatMessage {
                role: Role::System,
                text: s.into(),
                images: Vec::new(),
            });
        }
        messages.push(ChatMessage {
            role: Role::User,
            text: user.into(),
            images,
        });
        Self {
            model: settings.model.clone(),
            messages,
            max_tokens: settings.max_tokens,
            temperature: settings.temperature,
        }
    }

    pub fn to_json(&self) -> Value {
        let messages: Vec<Value> = self
            .messages
            .iter()
            .map(|m| {
                let role = match m.role {
                    Role::System => "system",
                    Role::User => "user",
                };
                if m.images.is_empty() {
                    return json!({"role": role, "content": m.text});
                }
                let mut parts = vec![json!({"type": "text", "text": m.text})];
                parts.extend(m.images.iter().map(|b64| {
                    json!({"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{b64}")}})
                }));
                json!({"role": role, "content": parts})
            })
            .collect();
        json!({
            "model": self.model,
            "messages": messages,
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
        })
    }
}

/// PNG bytes of an image, base64 encoded.
pub fn encode_png_base64(img: &RgbImage) -> String {
    let mut png = Vec::new();
    let buf: image::RgbImage =
        image::ImageBuffer::from_raw(img.width, img.height, img.data.clone()).expect("buffer matches dimensions");
    buf.write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
        .expect("in-memory PNG encoding");
    base64::engine::general_purpose::STANDARD.encode(png)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("connection failed: {0}")]
    Connection(String),
}

/// Sends one JSON POST.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, api_key: Option<&str>, body: &str, timeout: Duration)
        -> Result<HttpReply, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, api_key: Option<&str>, body: &str, _timeout: Duration)
        -> Result<HttpReply, TransportError> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        match req.send(body) {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                let body = resp
                    .body_mut()
                    .read_to_string()
                    .map_err(|e| TransportError::Connection(e.to_string()))?;
                Ok(HttpReply { status, body })
            }
            Err(ureq::Error::Timeout(t)) => Err(TransportError::Timeout(t.to_string())),
            Err(e) => Err(TransportError::Connection(e.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("no endpoint URL configured")]
    NotConfigured,
    #[error("authentication rejected (HTTP {0}); check {API_KEY_ENV}")]
    AuthError(u16),
    #[error("rate limited on all {0} attempts")]
    RateLimited(u32),
    #[error("endpoint unreachable after {attempts} attempts: {detail}")]
    Timeout { attempts: u32, detail: String },
    #[error("server error HTTP {status} after {attempts} attempts")]
    ServerError { status: u16, attempts: u32 },
    #[error("request rejected (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("request has no user message")]
    NoUserMessage,
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

enum Attempt {
    Done(Result<String, ClientError>),
    Retry(ClientError),
}

pub struct ChatClient {
    url: String,
    api_key: Option<String>,
    settings: EndpointSettings,
    transport: Box<dyn Transport>,
    gate: Gate,
}

impl ChatClient {
    /// Client over HTTP, reading the key from the environment.
    pub fn from_settings(settings: &EndpointSettings) -> Result<Self, ClientError> {
        let transport = UreqTransport::new(Duration::from_secs(settings.timeout_secs));
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_transport(settings, key, Box::new(transport))
    }

    pub fn with_transport(
        settings: &EndpointSettings,
        api_key: Option<String>,
        transport: Box<dyn Transport>,
    ) -> Result<Self, ClientError> {
        let base = settings.url.clone().ok_or(ClientError::NotConfigured)?;
        let base = base.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        };
        Ok(Self {
            url,
            api_key,
            settings: settings.clone(),
            transport,
            gate: Gate::new(settings.concurrency),
        })
    }

    pub fn settings(&self) -> &EndpointSettings {
        &self.settings
    }

    fn attempt(&self, body: &str, n: u32) -> Attempt {
        let reply = {
            let _permit = self.gate.acquire();
            self.transport.post_json(
                &self.url,
                self.api_key.as_deref(),
                body,
                Duration::from_secs(self.settings.timeout_secs),
            )
        };
        match reply {
            Err(e) => Attempt::Retry(ClientError::Timeout {
                attempts: n,
                detail: e.to_string(),
            }),
            Ok(r) if r.status == 401 || r.status == 403 => Attempt::Done(Err(ClientError::AuthError(r.status))),
            Ok(r) if r.status == 429 => Attempt::Retry(ClientError::RateLimited(n)),
            Ok(r) if r.status >= 500 => Attempt::Retry(ClientError::ServerError {
                status: r.status,
                attempts: n,
            }),
            Ok(r) if !(200..300).contains(&r.status) => Attempt::Done(Err(ClientError::Rejected {
                status: r.status,
                body: r.body.chars().take(300).collect(),
            })),
            Ok(r) => Attempt::Done(extract_content(&r.body)),
        }
    }

    /// Sends the request, retrying transient failures with exponential
    /// backoff up to the configured attempt count.
    pub fn complete(&self, req: &ChatRequest) -> Result<String, ClientError> {
        if !req.messages.iter().any(|m| m.role == Role::User) {
            return Err(ClientError::NoUserMessage);
        }
        let body = req.to_json().to_string();
        let attempts = self.settings.attempts.max(1);
        let mut last = ClientError::NotConfigured;
        for n in 1..=attempts {
            match self.attempt(&body, n) {
                Attempt::Done(r) => return r,
                Attempt::Retry(e) => last = e,
            }
            if n < attempts {
                std::thread::sleep(Duration::from_millis(self.settings.backoff_ms.saturating_mul(1 << (n - 1))));
            }
        }
        Err(last)
    }
}

fn extract_content(body: &str) -> Result<String, ClientError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ClientError::MalformedResponse(e.to_string()))?;
    let content = &v["choices"][0]["message"]["content"];
    if let Some(s) = content.as_str() {
        return Ok(s.to_string());
    }
    // Some servers return content as a list of text parts.
    if let Some(parts) = content.as_array() {
        let text: String = parts.iter().filter_map(|p| p["text"].as_str()).collect();
        if !text.is_empty() {
            return Ok(text);
        }
    }
    Err(ClientError::MalformedResponse("missing choices[0].message.content".into()))
}

/// Judge backed by a chat endpoint.
pub struct HttpJudge {
    pub client: Arc<ChatClient>,
}

impl Judge for HttpJudge {
    fn score(&self, question: &str, reference: &str, prediction: &str) -> Result<u8, JudgeError> {
        let req = ChatRequest::vision(
            self.client.settings(),
            None,
            &judge_prompt(question, reference, prediction),
            Vec::new(),
        );
        let reply = self
            .client
            .complete(&req)
            .map_err(|e| JudgeError::Unavailable(e.to_string()))?;
        parse_judge_reply(&reply)
    }
}
