//! Chat-completion client and the three LLM tasks built on it: summary
//! generation, batched entity alignment and direct salience prediction.
//!
//! Every request goes through [`Gateway::chat`], which consults a
//! content-addressed response cache before touching the transport.

mod align;
mod cache;
mod gateway;
mod generate;
mod mock;
mod predict;
pub mod prompts;
mod transport;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use align::{align_entities_llm, parse_alignment_reply, ParseError, DEFAULT_BATCH_SIZE, MAX_BATCH_SIZE, MIN_BATCH_SIZE};
pub use cache::{CacheEntry, ResponseCache};
pub use gateway::{Gateway, RetryPolicy};
pub use generate::{fix_sentence_punctuation, generate_summary, is_single_sentence, GenreExample, MAX_REPROMPTS};
pub use mock::MockTransport;
pub use predict::{parse_prediction_reply, predict_salience_llm, resolve_entity, select_shots, Prediction, Shot};
pub use transport::{post_json, EchoTransport, HttpTransport, ScriptedTransport, Transport, TransportError};

use crate::corpus::{Entity, Mention};
use crate::string_match::MatchConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl SamplingParams {
    /// Alignment and prediction settings.
    pub const JUDGE: SamplingParams = SamplingParams {
        temperature: 0.2,
        top_p: 0.7,
        max_tokens: 300,
    };

    /// Summary generation: provider defaults apart from the token cap.
    pub const GENERATION: SamplingParams = SamplingParams {
        temperature: 1.0,
        top_p: 1.0,
        max_tokens: 120,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model_name: String,
    pub system_prompt: String,
    pub user_prompt: String,
    /// Earlier turns of the same session, oldest first.
    pub history: Vec<Message>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub seed_hint: Option<u64>,
}

impl ChatRequest {
    pub fn new(model: &str, params: SamplingParams, system: impl Into<String>, user: impl Into<String>) -> Self {
        Self {
            model_name: model.to_owned(),
            system_prompt: system.into(),
            user_prompt: user.into(),
            history: Vec::new(),
            temperature: params.temperature,
            top_p: params.top_p,
            max_tokens: params.max_tokens,
            seed_hint: None,
        }
    }

    pub fn check(&self) -> Result<(), LlmError> {
        let bad = |m: &str| Err(LlmError::InvalidRequest(m.to_owned()));
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return bad("temperature must be a finite value >= 0");
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad("top_p must lie in (0, 1]");
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be at least 1");
        }
        Ok(())
    }

    /// System prompt, prior turns, then the current user prompt.
    pub fn messages(&self) -> Vec<Message> {
        let mut m = Vec::with_capacity(self.history.len() + 2);
        m.push(Message::new(Role::System, self.system_prompt.as_str()));
        m.extend(self.history.iter().cloned());
        m.push(Message::new(Role::User, self.user_prompt.as_str()));
        m
    }

    /// Continue the session: the current prompt and `reply` move into the
    /// history and `next` becomes the prompt.
    pub fn follow_up(&self, reply: &str, next: impl Into<String>) -> Self {
        let mut r = self.clone();
        r.history.push(Message::new(Role::User, std::mem::take(&mut r.user_prompt)));
        r.history.push(Message::new(Role::Assistant, reply));
        r.user_prompt = next.into();
        r
    }

    /// Hex SHA-256 over the endpoint, model, sampling parameters and every
    /// message of the request.
    pub fn cache_key(&self, endpoint: &str) -> String {
        #[derive(Serialize)]
        struct KeyMaterial<'a> {
            endpoint: &'a str,
            model: &'a str,
            temperature: f64,
            top_p: f64,
            max_tokens: u32,
            seed_hint: Option<u64>,
            messages: Vec<Message>,
        }
        let material = KeyMaterial {
            endpoint,
            model: &self.model_name,
            temperature: self.temperature,
            top_p: self.top_p,
            max_tokens: self.max_tokens,
            seed_hint: self.seed_hint,
            messages: self.messages(),
        };
        let bytes = serde_json::to_vec(&material).expect("key material serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Endpoint, model and per-task settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub generation: SamplingParams,
    pub alignment: SamplingParams,
    pub prediction: SamplingParams,
    /// Attempts per request, including the first.
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
    pub batch_size: usize,
    pub timeout_secs: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            generation: SamplingParams::GENERATION,
            alignment: SamplingParams::JUDGE,
            prediction: SamplingParams::JUDGE,
            retries: 3,
            backoff_ms: 500,
            max_in_flight: 4,
            batch_size: DEFAULT_BATCH_SIZE,
            timeout_secs: 60,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("request failed after {attempts} attempt(s): {source}")]
    Transport {
        attempts: u32,
        #[source]
        source: TransportError,
    },
    #[error("response cache {path}: {message}")]
    Cache { path: String, message: String },
    #[error("no genre examples available for document {0}")]
    NoExamples(String),
    #[error("summary for document {document} still has {chars} characters after {reprompts} re-prompts")]
    GenerationTooLong { document: String, chars: usize, reprompts: usize },
    #[error("summary for document {document} is not a single sentence: {text:?}")]
    NotSingleSentence { document: String, text: String },
    #[error("batch size {0} outside {MIN_BATCH_SIZE}..={MAX_BATCH_SIZE}")]
    BatchSize(usize),
    #[error("unreadable alignment reply for document {document}, summary {summary}, batch {batch} (entities {first}..{last}): {reason}")]
    BatchUnparseable {
        document: String,
        summary: String,
        batch: usize,
        first: String,
        last: String,
        reason: ParseError,
    },
    #[error("unreadable salience prediction for document {0}")]
    PredictionUnparseable(String),
}

impl LlmError {
    /// True when the failure came from the remote service rather than from
    /// the reply content or local configuration.
    pub fn is_service(&self) -> bool {
        matches!(self, LlmError::Transport { .. })
    }
}

/// Text shown to the model for an entity: its longest mention that is not
/// only pronouns, earliest on ties; falls back to the first mention.
pub fn entity_label(entity: &Entity, cfg: &MatchConfig) -> String {
    let pronoun_only = |s: &str| {
        crate::text::lower_words(s)
            .iter()
            .all(|w| cfg.pronouns.contains(w))
    };
    entity
        .mentions
        .iter()
        .filter(|m| !pronoun_only(&m.surface))
        .fold(None::<&Mention>, |best, m| match best {
            Some(b) if b.span.len() >= m.span.len() => Some(b),
            _ => Some(m),
        })
        .or_else(|| entity.first_mention())
        .map(|m| m.surface.clone())
        .unwrap_or_else(|| entity.id.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req() -> ChatRequest {
        ChatRequest::new("m", SamplingParams::JUDGE, "sys", "hello")
    }

    #[test]
    fn key_changes_with_every_parameter() {
        let base = req().cache_key("http://x");
        assert_eq!(base, req().cache_key("http://x"));
        assert_eq!(base.len(), 64);

        let mut r = req();
        r.temperature = 0.3;
        assert_ne!(r.cache_key("http://x"), base);
        let mut r = req();
        r.model_name = "other".into();
        assert_ne!(r.cache_key("http://x"), base);
        let mut r = req();
        r.seed_hint = Some(1);
        assert_ne!(r.cache_key("http://x"), base);
        assert_ne!(req().cache_key("http://y"), base);
        assert_ne!(req().follow_up("a", "b").cache_key("http://x"), base);
    }

    #[test]
    fn follow_up_builds_history() {
        let r = req().follow_up("first reply", "shorter please");
        let m = r.messages();
        assert_eq!(m.len(), 4);
        assert_eq!(m[1], Message::new(Role::User, "hello"));
        assert_eq!(m[2], Message::new(Role::Assistant, "first reply"));
        assert_eq!(m[3], Message::new(Role::User, "shorter please"));
    }

    #[test]
    fn parameter_bounds() {
        assert!(req().check().is_ok());
        let mut r = req();
        r.top_p = 0.0;
        assert!(r.check().is_err());
        let mut r = req();
        r.max_tokens = 0;
        assert!(r.check().is_err());
        let mut r = req();
        r.temperature = -0.1;
        assert!(r.check().is_err());
    }
}
