//! Minimal blocking HTTP abstraction so clients can run against recorded
//! responses in tests.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

pub const USER_AGENT_ENV: &str = "LODCOV_USER_AGENT";

/// User-Agent sent with every request; overridable through `LODCOV_USER_AGENT`.
pub fn user_agent() -> String {
    match std::env::var(USER_AGENT_ENV) {
        Ok(ua) if !ua.trim().is_empty() => ua,
        _ => format!(
            "lodcov/{} (LOD language coverage statistics)",
            env!("CARGO_PKG_VERSION")
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub method: Method,
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: Option<String>,
    pub timeout: Option<Duration>,
}

impl HttpRequest {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

impl HttpResponse {
    pub fn ok(body: impl Into<String>) -> Self {
        HttpResponse {
            status: 200,
            body: body.into(),
        }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("{0}")]
    Other(String),
}

pub trait Transport: Send + Sync {
    /// Non-2xx statuses are returned as responses, not errors.
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError>;
}

/// Live transport backed by `ureq`.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new() -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .new_agent();
        UreqTransport { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new()
    }
}

fn map_ureq(err: ureq::Error) -> TransportError {
    match err {
        ureq::Error::Timeout(_) => TransportError::Timeout,
        ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => TransportError::Timeout,
        other => TransportError::Other(other.to_string()),
    }
}

impl Transport for UreqTransport {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let result = match request.method {
            Method::Get => {
                let mut rb = self.agent.get(&request.url);
                for (k, v) in &request.headers {
                    rb = rb.header(k, v);
                }
                rb.config().timeout_global(request.timeout).build().call()
            }
            Method::Post => {
                let mut rb = self.agent.post(&request.url);
                for (k, v) in &request.headers {
                    rb = rb.header(k, v);
                }
                rb.config()
                    .timeout_global(request.timeout)
                    .build()
                    .send(request.body.as_deref().unwrap_or(""))
            }
        };
        let mut response = result.map_err(map_ureq)?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(map_ureq)?;
        Ok(HttpResponse { status, body })
    }
}

/// Enforces a minimum spacing between consecutive request starts, across
/// all threads sharing it.
#[derive(Debug)]
pub struct Throttle {
    delay: Duration,
    last: Mutex<Option<Instant>>,
}

impl Throttle {
    pub fn new(delay: Duration) -> Self {
        Throttle {
            delay,
            last: Mutex::new(None),
        }
    }

    pub fn wait(&self) {
        let mut last = self.last.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(prev) = *last {
            let ready = prev + self.delay;
            let now = Instant::now();
            if ready > now {
                std::thread::sleep(ready - now);
            }
        }
        *last = Some(Instant::now());
    }
}
