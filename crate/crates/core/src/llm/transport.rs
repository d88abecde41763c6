use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use super::ChatRequest;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("network: {0}")]
    Network(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl TransportError {
    /// Server errors, rate limiting and network failures are worth retrying.
    pub fn is_transient(&self) -> bool {
        match self {
            TransportError::Status(code) => *code >= 500 || *code == 429,
            TransportError::Network(_) => true,
            TransportError::Malformed(_) => false,
        }
    }
}

/// Sends one chat request and returns the reply text. No caching or retries.
pub trait Transport: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError>;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        (**self).complete(req)
    }
}

/// POST a JSON body and decode a JSON reply.
pub fn post_json(agent: &ureq::Agent, url: &str, api_key: Option<&str>, body: &Value) -> Result<Value, TransportError> {
    let mut call = agent.post(url).header("Content-Type", "application/json");
    if let Some(k) = api_key {
        call = call.header("Authorization", format!("Bearer {k}"));
    }
    match call.send_json(body) {
        Ok(mut resp) => resp
            .body_mut()
            .read_json::<Value>()
            .map_err(|e| TransportError::Malformed(e.to_string())),
        Err(ureq::Error::StatusCode(code)) => Err(TransportError::Status(code)),
        Err(e) => Err(TransportError::Network(e.to_string())),
    }
}

/// OpenAI-compatible chat-completion endpoint.
pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(url: &str, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            agent,
            url: url.to_owned(),
            api_key,
        }
    }
}

impl Transport for HttpTransport {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        let mut body = json!({
            "model": req.model_name,
            "messages": req.messages(),
            "temperature": req.temperature,
            "top_p": req.top_p,
            "max_tokens": req.max_tokens,
        });
        if let Some(seed) = req.seed_hint {
            body["seed"] = json!(seed);
        }
        let reply = post_json(&self.agent, &self.url, self.api_key.as_deref(), &body)?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| TransportError::Malformed("missing choices[0].message.content".into()))
    }
}

/// Replies with the user prompt.
#[derive(Debug, Default)]
pub struct EchoTransport;

impl Transport for EchoTransport {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        Ok(req.user_prompt.clone())
    }
}

/// Plays back queued replies in order and records every request.
#[derive(Debug, Default)]
pub struct ScriptedTransport {
    replies: Mutex<VecDeque<Result<String, TransportError>>>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl ScriptedTransport {
    pub fn new<I>(replies: I) -> Self
    where
        I: IntoIterator<Item = Result<String, TransportError>>,
    {
        Self {
            replies: Mutex::new(replies.into_iter().collect()),
            seen: Mutex::default(),
        }
    }

    pub fn ok<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self::new(replies.into_iter().map(|s| Ok(s.into())))
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().unwrap().clone()
    }
}

impl Transport for ScriptedTransport {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        self.seen.lock().unwrap().push(req.clone());
        self.replies
            .lock()
            .unwrap()
            .pop_front()
            .unwrap_or_else(|| Err(TransportError::Network("script exhausted".into())))
    }
}
