use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use super::{ChatRequest, LlmConfig, LlmError, ResponseCache, SamplingParams, Transport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Attempts per request, including the first.
    pub attempts: u32,
    /// Delay before the second attempt; doubled for each later one.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

/// Counting semaphore bounding requests in flight.
#[derive(Debug)]
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

/// Cached, retrying, concurrency-bounded access to one chat endpoint.
pub struct Gateway {
    endpoint: String,
    model: String,
    transport: Box<dyn Transport>,
    cache: ResponseCache,
    retry: RetryPolicy,
    limiter: Limiter,
    calls: AtomicU64,
}

impl Gateway {
    pub fn new(endpoint: &str, model: &str, transport: Box<dyn Transport>, cache: ResponseCache) -> Self {
        Self {
            endpoint: endpoint.to_owned(),
            model: model.to_owned(),
            transport,
            cache,
            retry: RetryPolicy::default(),
            limiter: Limiter::new(4),
            calls: AtomicU64::new(0),
        }
    }

    pub fn from_config(cfg: &LlmConfig, transport: Box<dyn Transport>, cache: ResponseCache) -> Self {
        Self::new(&cfg.endpoint, &cfg.model, transport, cache)
            .with_retry(RetryPolicy {
                attempts: cfg.retries.max(1),
                base_delay: Duration::from_millis(cfg.backoff_ms),
            })
            .with_max_in_flight(cfg.max_in_flight)
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.limiter = Limiter::new(n);
        self
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn request(&self, params: SamplingParams, system: impl Into<String>, user: impl Into<String>) -> ChatRequest {
        ChatRequest::new(&self.model, params, system, user)
    }

    /// Cached reply, or a fresh one from the transport (stored on success).
    pub fn chat(&self, req: &ChatRequest) -> Result<String, LlmError> {
        req.check()?;
        let key = req.cache_key(&self.endpoint);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        let _permit = self.limiter.acquire();
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.calls.fetch_add(1, Ordering::Relaxed);
            match self.transport.complete(req) {
                Ok(text) => {
                    self.cache.insert(&key, &text);
                    return Ok(text);
                }
                Err(e) if e.is_transient() && attempt < self.retry.attempts => {
                    thread::sleep(self.retry.base_delay * 2u32.pow(attempt - 1));
                }
                Err(source) => {
                    return Err(LlmError::Transport {
                        attempts: attempt,
                        source,
                    })
                }
            }
        }
    }

    /// Transport calls made so far, retries included.
    pub fn network_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }
}
