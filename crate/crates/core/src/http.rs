//! Blocking JSON-over-HTTP client shared by the encoder gateway and the LLM
//! adjudicator: bounded retries with exponential backoff, a hard per-call
//! deadline, and a process-wide cap on in-flight requests.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::Value;

/// First backoff delay; doubles after every failed attempt.
pub const BACKOFF_START: Duration = Duration::from_millis(100);
pub const DEFAULT_INFLIGHT_CAP: usize = 16;

#[derive(Debug, Clone)]
pub struct EndpointSettings {
    pub url: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
}

impl EndpointSettings {
    /// Upper bound on wall time spent in one call, retries included.
    pub fn call_budget(&self) -> Duration {
        Duration::from_millis(self.timeout_ms.saturating_mul(u64::from(self.max_retries) + 1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HttpFailure {
    /// The endpoint answered 404; not retried.
    NotFound(String),
    /// Transport errors, timeouts, non-2xx replies or undecodable bodies
    /// after all retries.
    Unavailable(String),
}

/// Counting semaphore limiting concurrent remote calls.
#[derive(Debug)]
pub struct InflightLimiter {
    cap: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a> {
    limiter: &'a InflightLimiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut used = self.limiter.used.lock().unwrap_or_else(|e| e.into_inner());
        *used -= 1;
        self.limiter.freed.notify_one();
    }
}

impl InflightLimiter {
    pub fn new(cap: usize) -> Self {
        Self {
            cap: cap.max(1),
            used: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Waits for a slot until `deadline`; `None` when the deadline passes.
    pub fn acquire_until(&self, deadline: Instant) -> Option<Permit<'_>> {
        let mut used = self.used.lock().unwrap_or_else(|e| e.into_inner());
        while *used >= self.cap {
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            used = self
                .freed
                .wait_timeout(used, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
        *used += 1;
        Some(Permit { limiter: self })
    }
}

impl Default for InflightLimiter {
    fn default() -> Self {
        Self::new(DEFAULT_INFLIGHT_CAP)
    }
}

enum Attempt {
    Done(Value),
    Fatal(HttpFailure),
    Retry(String),
}

fn attempt(url: &str, body: &str, timeout: Duration) -> Attempt {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let mut resp = match agent.post(url).header("content-type", "application/json").send(body) {
        Ok(resp) => resp,
        Err(e) => return Attempt::Retry(e.to_string()),
    };
    let status = resp.status().as_u16();
    if status == 404 {
        return Attempt::Fatal(HttpFailure::NotFound(format!("{url} returned 404")));
    }
    if !(200..300).contains(&status) {
        return Attempt::Retry(format!("{url} returned {status}"));
    }
    match resp.body_mut().read_to_string() {
        Ok(text) => match serde_json::from_str(&text) {
            Ok(v) => Attempt::Done(v),
            Err(e) => Attempt::Retry(format!("undecodable body from {url}: {e}")),
        },
        Err(e) => Attempt::Retry(e.to_string()),
    }
}

/// POSTs `body` and decodes a JSON reply, retrying transient failures.
/// Never runs past `settings.call_budget()`.
pub fn post_json(settings: &EndpointSettings, body: &Value, limiter: &InflightLimiter) -> Result<Value, HttpFailure> {
    let started = Instant::now();
    let deadline = started + settings.call_budget();
    let per_try = Duration::from_millis(settings.timeout_ms.max(1));
    let body = body.to_string();

    let _permit = limiter
        .acquire_until(deadline)
        .ok_or_else(|| HttpFailure::Unavailable("in-flight cap wait exceeded budget".into()))?;

    let mut backoff = BACKOFF_START;
    let mut last_error = String::from("no attempt made");
    for n in 0..=settings.max_retries {
        let now = Instant::now();
        if now >= deadline {
            break;
        }
        match attempt(&settings.url, &body, per_try.min(deadline - now)) {
            Attempt::Done(v) => return Ok(v),
            Attempt::Fatal(f) => return Err(f),
            Attempt::Retry(msg) => last_error = msg,
        }
        if n < settings.max_retries {
            let now = Instant::now();
            if now >= deadline {
                break;
            }
            thread::sleep(backoff.min(deadline - now));
            backoff *= 2;
        }
    }
    Err(HttpFailure::Unavailable(format!(
        "{} after {} attempt(s): {last_error}",
        settings.url,
        settings.max_retries + 1
    )))
}
