//! Live data acquisition: Wikipedia article counts through the MediaWiki
//! action API, per-language entity counts through SPARQL endpoints, and
//! the CSV files that let the rest of the pipeline run offline.
//!
//! All HTTP goes through an injectable [`Transport`]; the test suite only
//! ever talks to recorded responses.

mod mediawiki;
mod sparql;
mod tables;
mod transport;

pub use mediawiki::{parse_site_statistics, MediaWikiClient, WikiEdition, DEFAULT_API_TEMPLATE};
pub use sparql::{fetch_sparql_language_count, parse_single_count, SparqlClient, SparqlEndpointConfig, SPARQL_RESULTS_JSON};
pub use tables::{
    load_article_counts_csv, load_counts_csv, read_article_counts_csv, read_counts_csv,
    write_article_counts_csv, write_counts_csv, write_fetch_errors_csv, CountRow, TableError,
};
pub use transport::{
    user_agent, HttpRequest, HttpResponse, Method, Throttle, Transport, TransportError,
    UreqTransport, USER_AGENT_ENV,
};

#[cfg(test)]
pub(crate) use transport::mock::MockTransport;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FetchError {
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("expected a single result row, got {0}")]
    TooManyRows(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl From<TransportError> for FetchError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::Timeout => FetchError::Timeout,
            TransportError::Other(msg) => FetchError::Transport(msg),
        }
    }
}

impl FetchError {
    fn is_retryable(&self) -> bool {
        match self {
            FetchError::Timeout | FetchError::Transport(_) => true,
            FetchError::Status(s) => *s == 429 || *s >= 500,
            _ => false,
        }
    }
}

/// Successes and per-key failures of a batch fetch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchBatch<K: Ord> {
    pub ok: BTreeMap<K, u64>,
    pub errors: BTreeMap<K, FetchError>,
}

impl<K: Ord> Default for FetchBatch<K> {
    fn default() -> Self {
        FetchBatch {
            ok: BTreeMap::new(),
            errors: BTreeMap::new(),
        }
    }
}

/// Runs `f` over `items` with at most `workers` threads, keeping input order.
pub(crate) fn run_bounded<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new(items.iter().map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let r = f(item);
                slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}
