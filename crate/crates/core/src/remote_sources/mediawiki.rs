use std::sync::Arc;
use std::time::Duration;

use serde_json::Value;

use super::{run_bounded, FetchBatch, FetchError, HttpRequest, Method, Throttle, Transport};

pub const DEFAULT_API_TEMPLATE: &str = "https://{edition}.wikipedia.org/w/api.php";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WikiEdition {
    pub edition_code: String,
    pub api_url: String,
}

impl WikiEdition {
    pub fn new(edition_code: &str, api_url: &str) -> Result<Self, FetchError> {
        let code = edition_code.trim();
        if code.is_empty() {
            return Err(FetchError::Config("empty edition code".into()));
        }
        let parsed = url::Url::parse(api_url)
            .map_err(|e| FetchError::Config(format!("bad API URL `{api_url}`: {e}")))?;
        if !parsed.has_host() {
            return Err(FetchError::Config(format!("API URL `{api_url}` has no host")));
        }
        Ok(WikiEdition {
            edition_code: code.to_ascii_lowercase(),
            api_url: api_url.to_string(),
        })
    }

    /// Edition whose API URL is `template` with `{edition}` substituted.
    pub fn from_template(edition_code: &str, template: &str) -> Result<Self, FetchError> {
        let code = edition_code.trim().to_ascii_lowercase();
        WikiEdition::new(&code, &template.replace("{edition}", &code))
    }

    fn statistics_url(&self) -> String {
        let sep = if self.api_url.contains('?') { '&' } else { '?' };
        format!(
            "{}{sep}action=query&meta=siteinfo&siprop=statistics&format=json",
            self.api_url
        )
    }
}

/// Extracts `query.statistics.articles` from a siteinfo response.
pub fn parse_site_statistics(body: &str) -> Result<u64, FetchError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| FetchError::Malformed(e.to_string()))?;
    let articles = value
        .pointer("/query/statistics/articles")
        .ok_or_else(|| FetchError::Malformed("missing `articles` field".into()))?;
    match articles {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .ok_or_else(|| FetchError::Malformed(format!("`articles` is not a count: {articles}")))
}

/// Site-statistics client; uses the `articles` (content pages) statistic.
pub struct MediaWikiClient {
    transport: Arc<dyn Transport>,
    user_agent: String,
    timeout: Duration,
    max_concurrent: usize,
    throttle: Throttle,
}

impl MediaWikiClient {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        MediaWikiClient {
            transport,
            user_agent: super::user_agent(),
            timeout: Duration::from_secs(30),
            max_concurrent: 1,
            throttle: Throttle::new(Duration::ZERO),
        }
    }

    pub fn with_user_agent(mut self, ua: impl Into<String>) -> Self {
        self.user_agent = ua.into();
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_max_concurrent(mut self, n: usize) -> Self {
        self.max_concurrent = n.max(1);
        self
    }

    pub fn with_politeness_delay(mut self, delay: Duration) -> Self {
        self.throttle = Throttle::new(delay);
        self
    }

    pub fn fetch_article_count(&self, edition: &WikiEdition) -> Result<u64, FetchError> {
        let request = HttpRequest {
            method: Method::Get,
            url: edition.statistics_url(),
            headers: vec![
                ("User-Agent".into(), self.user_agent.clone()),
                ("Accept".into(), "application/json".into()),
            ],
            body: None,
            timeout: Some(self.timeout),
        };
        self.throttle.wait();
        let response = self.transport.execute(&request)?;
        if !response.is_success() {
            return Err(FetchError::Status(response.status));
        }
        parse_site_statistics(&response.body)
    }

    /// Fetches every edition; failures are recorded per edition and never
    /// abort the batch.
    pub fn fetch_wikipedia_article_counts(&self, editions: &[WikiEdition]) -> FetchBatch<String> {
        let results = run_bounded(editions, self.max_concurrent, |e| self.fetch_article_count(e));
        let mut batch = FetchBatch::default();
        for (edition, result) in editions.iter().zip(results) {
            match result {
                Ok(n) => {
                    batch.ok.insert(edition.edition_code.clone(), n);
                }
                Err(e) => {
                    log::warn!("{}: {e}", edition.edition_code);
                    batch.errors.insert(edition.edition_code.clone(), e);
                }
            }
        }
        batch
    }
}
