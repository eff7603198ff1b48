//! Plain-text run configuration.
//!
//! One `key = value` pair per line; `#` starts a comment; blank lines are
//! ignored. Relative paths resolve against the config file's directory.
//!
//! ```text
//! output_dir = out
//! wals.languoids = data/wals.csv
//! bridge.iso = data/iso639.csv
//! articles.csv = data/articles.csv
//! source.dbpedia.dump = dumps/labels_a.nt.gz, dumps/labels_b.nt.gz
//! source.babelnet.sparql = https://babelnet.example/sparql
//! source.babelnet.query = SELECT (COUNT(DISTINCT ?s) AS ?n) WHERE { ... "{lang}" ... }
//! source.babelnet.tags = en, fr, de
//! analysis.k = 6
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use crate::analysis::{FeatureTransform, KMeansParams, DEFAULT_TAU};
use crate::coverage::SourceId;
use crate::langcodes::{normalize_tag, LanguageTag};
use crate::rdf_ingest::{CountMode, PredicateFilter, DEFAULT_PRECISION, MAX_PRECISION, MIN_PRECISION};
use crate::remote_sources::{SparqlEndpointConfig, DEFAULT_API_TEMPLATE};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("`{key}`: invalid value `{value}` ({reason})")]
    Invalid {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceInput {
    /// N-Triples dumps (plain or gzip); several paths are counted as shards.
    Dump(Vec<PathBuf>),
    /// Rows of a `source,language_tag,entity_count` table with this source name.
    Counts(PathBuf),
    Sparql {
        endpoint: SparqlEndpointConfig,
        query: String,
        tags: Vec<LanguageTag>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArticleSource {
    Csv(PathBuf),
    Api { editions: Vec<String>, api_template: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSettings {
    pub mode: CountMode,
    pub strict: bool,
    pub filter: PredicateFilter,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub kmeans: KMeansParams,
    pub tau: f64,
    pub transform: FeatureTransform,
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub wals_languoids: PathBuf,
    pub wals_written: Option<PathBuf>,
    pub written_filter: bool,
    pub bridge_iso: Option<PathBuf>,
    pub bridge_overrides: Option<PathBuf>,
    pub articles: ArticleSource,
    pub sources: BTreeMap<SourceId, SourceInput>,
    pub ingest: IngestSettings,
    pub analysis: AnalysisSettings,
    /// Raw key/value pairs as written, echoed into reports.
    pub echo: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Invalid {
            key: "--config".into(),
            value: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
        let raw = parse_pairs(text)?;
        let mut kv = Keys {
            raw: &raw,
            base: base_dir,
        };
        kv.check_known()?;

        let output_dir = kv.path("output_dir")?.unwrap_or_else(|| base_dir.join("out"));
        let wals_languoids = kv.path("wals.languoids")?.ok_or_else(|| ConfigError::Missing("wals.languoids".into()))?;
        let wals_written = kv.path("wals.written")?;
        let written_filter = kv.parse_or("wals.written_filter", true, parse_bool)?;
        let bridge_iso = kv.path("bridge.iso")?;
        let bridge_overrides = kv.path("bridge.overrides")?;

        let articles = match (kv.path("articles.csv")?, kv.raw_value("articles.editions")) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Inconsistent(
                    "set either `articles.csv` or `articles.editions`, not both".into(),
                ))
            }
            (Some(p), None) => ArticleSource::Csv(p),
            (None, Some(list)) => ArticleSource::Api {
                editions: split_list(list).map(|e| e.to_ascii_lowercase()).collect(),
                api_template: kv.get("articles.api_template").unwrap_or(DEFAULT_API_TEMPLATE).to_string(),
            },
            (None, None) => {
                return Err(ConfigError::Missing("articles.csv or articles.editions".into()))
            }
        };

        let sparql_defaults = SparqlEndpointConfig::new("");
        let timeout = kv.parse_or("sparql.timeout_secs", sparql_defaults.timeout.as_secs(), parse_num)?;
        let max_concurrent = kv.parse_or("sparql.max_concurrent", sparql_defaults.max_concurrent, parse_num)?;
        let retry_budget = kv.parse_or("sparql.retry_budget", sparql_defaults.retry_budget, parse_num)?;
        let politeness_ms = kv.parse_or(
            "sparql.politeness_ms",
            sparql_defaults.politeness_delay.as_millis() as u64,
            parse_num,
        )?;

        let mut sources = BTreeMap::new();
        for name in kv.source_names() {
            let key = |field: &str| format!("source.{name}.{field}");
            let id = SourceId::new(name.clone()).map_err(|e| ConfigError::Invalid {
                key: key("*"),
                value: name.clone(),
                reason: e.to_string(),
            })?;
            let dump = kv.get(&key("dump"));
            let counts = kv.path(&key("counts"))?;
            let sparql = kv.get(&key("sparql"));
            let input = match (dump, counts, sparql) {
                (Some(list), None, None) => {
                    SourceInput::Dump(split_list(list).map(|p| base_dir.join(p)).collect())
                }
                (None, Some(p), None) => SourceInput::Counts(p),
                (None, None, Some(url)) => {
                    let query = kv
                        .get(&key("query"))
                        .ok_or_else(|| ConfigError::Missing(key("query")))?
                        .to_string();
                    let tags = split_list(kv.get(&key("tags")).ok_or_else(|| ConfigError::Missing(key("tags")))?)
                        .map(|t| {
                            normalize_tag(t).map_err(|e| ConfigError::Invalid {
                                key: key("tags"),
                                value: t.to_string(),
                                reason: e.to_string(),
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let endpoint = SparqlEndpointConfig {
                        timeout: Duration::from_secs(timeout),
                        max_concurrent,
                        retry_budget,
                        politeness_delay: Duration::from_millis(politeness_ms),
                        ..SparqlEndpointConfig::new(url)
                    };
                    endpoint.validate().map_err(|e| ConfigError::Invalid {
                        key: key("sparql"),
                        value: url.to_string(),
                        reason: e.to_string(),
                    })?;
                    SourceInput::Sparql { endpoint, query, tags }
                }
                _ => {
                    return Err(ConfigError::Inconsistent(format!(
                        "source `{name}` needs exactly one of dump, counts or sparql"
                    )))
                }
            };
            if !matches!(input, SourceInput::Sparql { .. })
                && (kv.get(&key("query")).is_some() || kv.get(&key("tags")).is_some())
            {
                return Err(ConfigError::Inconsistent(format!(
                    "source `{name}`: query/tags only apply to sparql sources"
                )));
            }
            sources.insert(id, input);
        }
        if sources.is_empty() {
            return Err(ConfigError::Missing("source.<name>.(dump|counts|sparql)".into()));
        }

        let mode = match kv.get("ingest.mode").unwrap_or("exact") {
            "exact" => CountMode::Exact,
            "approximate" => {
                let precision = kv.parse_or("ingest.precision", DEFAULT_PRECISION, parse_num)?;
                if !(MIN_PRECISION..=MAX_PRECISION).contains(&precision) {
                    return Err(kv.invalid(
                        "ingest.precision",
                        &format!("must be in {MIN_PRECISION}..={MAX_PRECISION}"),
                    ));
                }
                let seed = kv.parse_or("ingest.seed", 0, parse_num)?;
                CountMode::Approximate { precision, seed }
            }
            _ => return Err(kv.invalid("ingest.mode", "expected `exact` or `approximate`")),
        };
        if mode == CountMode::Exact && (kv.get("ingest.precision").is_some() || kv.get("ingest.seed").is_some()) {
            return Err(ConfigError::Inconsistent(
                "ingest.precision/ingest.seed require ingest.mode = approximate".into(),
            ));
        }
        let filter = match kv.get("ingest.predicates").unwrap_or("labels") {
            "labels" => PredicateFilter::labels(),
            "any" => PredicateFilter::Any,
            list => PredicateFilter::Only(split_list(list).map(String::from).collect()),
        };
        let ingest = IngestSettings {
            mode,
            strict: kv.parse_or("ingest.strict", false, parse_bool)?,
            filter,
            threads: kv.parse_or("ingest.threads", 1, parse_num)?.max(1),
        };

        let defaults = KMeansParams::default();
        let kmeans = KMeansParams {
            k: kv.parse_or("analysis.k", defaults.k, parse_num)?,
            seed: kv.parse_or("analysis.seed", defaults.seed, parse_num)?,
            max_iter: kv.parse_or("analysis.max_iter", defaults.max_iter, parse_num)?,
            tol: kv.parse_or("analysis.tol", defaults.tol, parse_num)?,
            restarts: kv.parse_or("analysis.restarts", defaults.restarts, parse_num)?,
        };
        if kmeans.k == 0 {
            return Err(kv.invalid("analysis.k", "must be at least 1"));
        }
        if kmeans.max_iter == 0 || kmeans.restarts == 0 {
            return Err(ConfigError::Inconsistent(
                "analysis.max_iter and analysis.restarts must be at least 1".into(),
            ));
        }
        if !(kmeans.tol > 0.0 && kmeans.tol.is_finite()) {
            return Err(kv.invalid("analysis.tol", "must be positive"));
        }
        let tau = kv.parse_or("analysis.tau", DEFAULT_TAU, parse_num)?;
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(kv.invalid("analysis.tau", "must be positive"));
        }
        let transform = match kv.get("analysis.features").unwrap_or("log10") {
            "log10" => FeatureTransform::Log10,
            "raw" => FeatureTransform::Raw,
            _ => return Err(kv.invalid("analysis.features", "expected `log10` or `raw`")),
        };
        let analysis = AnalysisSettings {
            kmeans,
            tau,
            transform,
            reference: kv.path("analysis.reference")?,
        };

        Ok(RunConfig {
            output_dir,
            wals_languoids,
            wals_written,
            written_filter,
            bridge_iso,
            bridge_overrides,
            articles,
            sources,
            ingest,
            analysis,
            echo: raw.into_iter().map(|(k, (_, v))| (k, v)).collect(),
        })
    }

    pub fn counts_csv(&self) -> PathBuf {
        self.output_dir.join("counts.csv")
    }

    pub fn articles_csv(&self) -> PathBuf {
        match &self.articles {
            ArticleSource::Csv(p) => p.clone(),
            ArticleSource::Api { .. } => self.output_dir.join("articles.csv"),
        }
    }

    pub fn articles_errors_csv(&self) -> PathBuf {
        self.output_dir.join("articles_errors.csv")
    }

    pub fn coverage_json(&self) -> PathBuf {
        self.output_dir.join("coverage.json")
    }

    pub fn unmapped_csv(&self) -> PathBuf {
        self.output_dir.join("unmapped_tags.csv")
    }

    pub fn report_json(&self) -> PathBuf {
        self.output_dir.join("report.json")
    }

    pub fn report_csv(&self) -> PathBuf {
        self.output_dir.join("report.csv")
    }

    pub fn scatter_tsv(&self) -> PathBuf {
        self.output_dir.join("scatter.tsv")
    }

    pub fn has_dump_sources(&self) -> bool {
        self.sources.values().any(|s| matches!(s, SourceInput::Dump(_)))
    }
}

const KNOWN_KEYS: &[&str] = &[
    "output_dir",
    "wals.languoids",
    "wals.written",
    "wals.written_filter",
    "bridge.iso",
    "bridge.overrides",
    "articles.csv",
    "articles.editions",
    "articles.api_template",
    "sparql.timeout_secs",
    "sparql.max_concurrent",
    "sparql.retry_budget",
    "sparql.politeness_ms",
    "ingest.mode",
    "ingest.precision",
    "ingest.seed",
    "ingest.strict",
    "ingest.predicates",
    "ingest.threads",
    "analysis.k",
    "analysis.seed",
    "analysis.tol",
    "analysis.max_iter",
    "analysis.restarts",
    "analysis.tau",
    "analysis.features",
    "analysis.reference",
];

const SOURCE_FIELDS: &[&str] = &["dump", "counts", "sparql", "query", "tags"];

fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or(ConfigError::Syntax { line: line_no })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: line_no });
        }
        if out
            .insert(key.to_string(), (line_no, value.trim().to_string()))
            .is_some()
        {
            return Err(ConfigError::Duplicate {
                line: line_no,
                key: key.to_string(),
            });
        }
    }
    Ok(out)
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

fn parse_num<T: std::str::FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| e.to_string())
}

struct Keys<'a> {
    raw: &'a BTreeMap<String, (usize, String)>,
    base: &'a Path,
}

impl Keys<'_> {
    fn check_known(&mut self) -> Result<(), ConfigError> {
        for key in self.raw.keys() {
            let known = KNOWN_KEYS.contains(&key.as_str())
                || key
                    .strip_prefix("source.")
                    .and_then(|rest| rest.rsplit_once('.'))
                    .is_some_and(|(name, field)| !name.is_empty() && SOURCE_FIELDS.contains(&field));
            if !known {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }
        Ok(())
    }

    fn source_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .raw
            .keys()
            .filter_map(|k| k.strip_prefix("source.")?.rsplit_once('.').map(|(n, _)| n.to_string()))
            .collect();
        names.dedup();
        names
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.raw
            .get(key)
            .map(|(_, v)| v.as_str())
            .filter(|v| !v.is_empty())
    }

    /// Like `get`, but an empty value counts as present.
    fn raw_value(&self, key: &str) -> Option<&str> {
        self.raw.get(key).map(|(_, v)| v.as_str())
    }

    fn path(&self, key: &str) -> Result<Option<PathBuf>, ConfigError> {
        Ok(self.get(key).map(|v| self.base.join(v)))
    }

    fn invalid(&self, key: &str, reason: &str) -> ConfigError {
        ConfigError::Invalid {
            key: key.to_string(),
            value: self.get(key).unwrap_or_default().to_string(),
            reason: reason.to_string(),
        }
    }

    fn parse_or<T>(&self, key: &str, default: T, parse: impl Fn(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse(v).map_err(|reason| self.invalid(key, &reason)),
        }
    }
}
