use std::sync::Arc;
use std::time::Duration;

use serde_json::Value;

use super::{run_bounded, FetchBatch, FetchError, HttpRequest, Method, Throttle, Transport};
use crate::langcodes::LanguageTag;

pub const SPARQL_RESULTS_JSON: &str = "application/sparql-results+json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparqlEndpointConfig {
    pub endpoint_url: String,
    pub timeout: Duration,
    pub max_concurrent: usize,
    pub retry_budget: u32,
    pub politeness_delay: Duration,
    /// First retry waits this long; each further retry doubles it.
    pub backoff_base: Duration,
}

impl SparqlEndpointConfig {
    pub fn new(endpoint_url: impl Into<String>) -> Self {
        SparqlEndpointConfig {
            endpoint_url: endpoint_url.into(),
            timeout: Duration::from_secs(60),
            max_concurrent: 1,
            retry_budget: 3,
            politeness_delay: Duration::from_millis(500),
            backoff_base: Duration::from_secs(1),
        }
    }

    pub fn validate(&self) -> Result<(), FetchError> {
        let url = url::Url::parse(&self.endpoint_url)
            .map_err(|e| FetchError::Config(format!("bad endpoint `{}`: {e}", self.endpoint_url)))?;
        if !url.has_host() {
            return Err(FetchError::Config("endpoint URL has no host".into()));
        }
        if self.max_concurrent == 0 {
            return Err(FetchError::Config("max_concurrent must be at least 1".into()));
        }
        if self.timeout.is_zero() {
            return Err(FetchError::Config("timeout must be positive".into()));
        }
        Ok(())
    }
}

/// Reads the single integer binding of a one-row, one-variable
/// SPARQL JSON results document.
pub fn parse_single_count(body: &str) -> Result<u64, FetchError> {
    let doc: Value =
        serde_json::from_str(body).map_err(|e| FetchError::Malformed(e.to_string()))?;
    let rows = doc
        .pointer("/results/bindings")
        .and_then(Value::as_array)
        .ok_or_else(|| FetchError::Malformed("missing results.bindings".into()))?;
    let row = match rows.len() {
        0 => return Err(FetchError::Malformed("no result rows".into())),
        1 => rows[0]
            .as_object()
            .ok_or_else(|| FetchError::Malformed("binding row is not an object".into()))?,
        n => return Err(FetchError::TooManyRows(n)),
    };
    if row.len() != 1 {
        return Err(FetchError::Malformed(format!(
            "expected one variable, got {}",
            row.len()
        )));
    }
    let (_, term) = row.iter().next().expect("one variable");
    let value = term
        .get("value")
        .ok_or_else(|| FetchError::Malformed("binding without value".into()))?;
    match value {
        Value::String(s) => s.trim().parse::<u64>().ok(),
        Value::Number(n) => n.as_u64(),
        _ => None,
    }
    .ok_or_else(|| FetchError::Malformed(format!("not a non-negative integer: {value}")))
}

/// One client per endpoint. The politeness delay is shared by all worker
/// threads of the client.
pub struct SparqlClient {
    cfg: SparqlEndpointConfig,
    transport: Arc<dyn Transport>,
    user_agent: String,
    throttle: Throttle,
}

impl SparqlClient {
    pub fn new(cfg: SparqlEndpointConfig, transport: Arc<dyn Transport>) -> Result<Self, FetchError> {
        cfg.validate()?;
        Ok(SparqlClient {
            throttle: Throttle::new(cfg.politeness_delay),
            cfg,
            transport,
            user_agent: super::user_agent(),
        })
    }

    pub fn with_user_agent(mut self, ua: impl Into<String>) -> Self {
        self.user_agent = ua.into();
        self
    }

    pub fn config(&self) -> &SparqlEndpointConfig {
        &self.cfg
    }

    fn render(template: &str, tag: &LanguageTag) -> Result<String, FetchError> {
        if !template.contains("{lang}") {
            return Err(FetchError::Config("query template lacks `{lang}`".into()));
        }
        let code = tag.canonical();
        if !code.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-') {
            return Err(FetchError::Config(format!("unsafe language tag `{code}`")));
        }
        Ok(template.replace("{lang}", code))
    }

    fn attempt(&self, body: &str) -> Result<u64, FetchError> {
        let request = HttpRequest {
            method: Method::Post,
            url: self.cfg.endpoint_url.clone(),
            headers: vec![
                ("User-Agent".into(), self.user_agent.clone()),
                ("Accept".into(), SPARQL_RESULTS_JSON.into()),
                (
                    "Content-Type".into(),
                    "application/x-www-form-urlencoded".into(),
                ),
            ],
            body: Some(body.to_string()),
            timeout: Some(self.cfg.timeout),
        };
        self.throttle.wait();
        let response = self.transport.execute(&request)?;
        if !response.is_success() {
            return Err(FetchError::Status(response.status));
        }
        parse_single_count(&response.body)
    }

    /// Counts entities for one tag, retrying transient failures up to the
    /// retry budget with exponential backoff.
    pub fn fetch_language_count(&self, template: &str, tag: &LanguageTag) -> Result<u64, FetchError> {
        let query = Self::render(template, tag)?;
        let body: String = url::form_urlencoded::Serializer::new(String::new())
            .append_pair("query", &query)
            .finish();
        let mut attempt = 0u32;
        loop {
            match self.attempt(&body) {
                Ok(n) => return Ok(n),
                Err(e) if e.is_retryable() && attempt < self.cfg.retry_budget => {
                    let wait = self.cfg.backoff_base.saturating_mul(1u32 << attempt.min(16));
                    log::debug!("{tag}: {e}; retry {} in {wait:?}", attempt + 1);
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Per-language queries with at most `max_concurrent` in flight.
    pub fn fetch_language_counts(&self, template: &str, tags: &[LanguageTag]) -> FetchBatch<LanguageTag> {
        let results = run_bounded(tags, self.cfg.max_concurrent, |t| {
            self.fetch_language_count(template, t)
        });
        let mut batch = FetchBatch::default();
        for (tag, result) in tags.iter().zip(results) {
            match result {
                Ok(n) => {
                    batch.ok.insert(tag.clone(), n);
                }
                Err(e) => {
                    log::warn!("{}: {tag}: {e}", self.cfg.endpoint_url);
                    batch.errors.insert(tag.clone(), e);
                }
            }
        }
        batch
    }
}

/// Convenience wrapper over [`SparqlClient::fetch_language_count`].
pub fn fetch_sparql_language_count(
    cfg: &SparqlEndpointConfig,
    transport: Arc<dyn Transport>,
    query_template: &str,
    tag: &LanguageTag,
) -> Result<u64, FetchError> {
    SparqlClient::new(cfg.clone(), transport)?.fetch_language_count(query_template, tag)
}
