//! Pipeline orchestration behind the command-line verbs.
//!
//! Each command reads the inputs named in a [`RunConfig`], writes its
//! outputs under `output_dir` and returns the warnings it emitted. A
//! non-empty warning list means the run completed in degraded mode.

mod config;
mod report;

pub use config::{AnalysisSettings, ArticleSource, ConfigError, IngestSettings, RunConfig, SourceInput};
pub use report::{
    analyze_table, category_histogram, NmiSummary, ReferenceLabels, ReportMetadata, ReportRow,
    RunReport, ARTICLE_STATISTIC,
};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::coverage::{build_coverage_table, CoverageError, CoverageTable, SourceId};
use crate::langcodes::{
    fold_counts_by_languoid, load_wals, map_tag_to_languoid, normalize_tag, write_unmapped_csv,
    CodeBridge, LangError, LanguageTag, WalsIndex,
};
use crate::rdf_ingest::{count_reader_parallel, open_dump, CountAccumulator, CountOptions, IngestError};
use crate::remote_sources::{
    load_article_counts_csv, load_counts_csv, write_article_counts_csv, write_counts_csv,
    write_fetch_errors_csv, CountRow, MediaWikiClient, SparqlClient, TableError, Transport,
    WikiEdition,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Ingest {
        path: String,
        #[source]
        source: IngestError,
    },
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Fetch(String),
    #[error("{path}: {reason}")]
    Input { path: String, reason: String },
}

impl PipelineError {
    /// Configuration problems, as opposed to bad or unreadable data.
    pub fn is_usage(&self) -> bool {
        matches!(self, PipelineError::Config(_))
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn input(path: &Path, reason: impl ToString) -> Self {
        PipelineError::Input {
            path: path.display().to_string(),
            reason: reason.to_string(),
        }
    }
}

pub type Warnings = Vec<String>;

fn create_output(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| PipelineError::io(path, e))
}

fn write_output(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> Result<(), Box<dyn std::error::Error>>,
) -> Result<(), PipelineError> {
    let mut out = create_output(path)?;
    write(&mut out).map_err(|e| PipelineError::input(path, e))?;
    out.flush().map_err(|e| PipelineError::io(path, e))
}

#[derive(Debug)]
pub struct CountOutcome {
    pub rows: Vec<CountRow>,
    pub path: PathBuf,
    pub warnings: Warnings,
}

/// Counts every dump source and writes `counts.csv`.
pub fn cmd_count(cfg: &RunConfig) -> Result<CountOutcome, PipelineError> {
    let opts = CountOptions {
        filter: cfg.ingest.filter.clone(),
        strict: cfg.ingest.strict,
    };
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (source, input) in &cfg.sources {
        let SourceInput::Dump(paths) = input else { continue };
        let mut total = CountAccumulator::new(cfg.ingest.mode);
        for path in paths {
            let reader = open_dump(path).map_err(|e| PipelineError::io(path, e))?;
            let acc = count_reader_parallel(reader, &opts, cfg.ingest.mode, cfg.ingest.threads).map_err(
                |source| PipelineError::Ingest {
                    path: path.display().to_string(),
                    source,
                },
            )?;
            log::info!(
                "{source}: {}: {} lines, {} labelled triples",
                path.display(),
                acc.lines_consumed(),
                acc.triples_seen()
            );
            if acc.parse_errors() > 0 {
                warnings.push(format!(
                    "{}: skipped {} malformed lines",
                    path.display(),
                    acc.parse_errors()
                ));
            }
            total.merge(acc).map_err(|source| PipelineError::Ingest {
                path: path.display().to_string(),
                source,
            })?;
        }
        rows.extend(total.report_counts().into_iter().map(|(tag, count)| CountRow {
            source: source.clone(),
            tag,
            count,
        }));
    }
    let path = cfg.counts_csv();
    write_output(&path, |w| Ok(write_counts_csv(w, &rows)?))?;
    Ok(CountOutcome { rows, path, warnings })
}

#[derive(Debug)]
pub struct FetchOutcome {
    pub articles: BTreeMap<String, u64>,
    pub failed: usize,
    pub warnings: Warnings,
}

/// Fetches article counts for the configured editions and writes
/// `articles.csv` plus the `articles_errors.csv` sidecar.
pub fn cmd_fetch_wiki(cfg: &RunConfig, transport: Arc<dyn Transport>) -> Result<FetchOutcome, PipelineError> {
    let ArticleSource::Api { editions, api_template } = &cfg.articles else {
        return Err(ConfigError::Missing("articles.editions".into()).into());
    };
    let editions = editions
        .iter()
        .map(|e| WikiEdition::from_template(e, api_template))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ConfigError::Invalid {
            key: "articles.editions".into(),
            value: editions.join(","),
            reason: e.to_string(),
        })?;
    let batch = MediaWikiClient::new(transport).fetch_wikipedia_article_counts(&editions);
    let out = cfg.articles_csv();
    write_output(&out, |w| Ok(write_article_counts_csv(w, &batch.ok)?))?;
    write_output(&cfg.articles_errors_csv(), |w| {
        Ok(write_fetch_errors_csv(w, "edition", &batch.errors)?)
    })?;
    if !editions.is_empty() && batch.ok.is_empty() {
        return Err(PipelineError::Fetch(format!(
            "all {} Wikipedia editions failed; see {}",
            editions.len(),
            cfg.articles_errors_csv().display()
        )));
    }
    let warnings = batch
        .errors
        .iter()
        .map(|(edition, e)| format!("edition {edition}: {e}"))
        .collect();
    Ok(FetchOutcome {
        failed: batch.errors.len(),
        articles: batch.ok,
        warnings,
    })
}

#[derive(Debug)]
pub struct BuildOutcome {
    pub table: CoverageTable,
    pub unmapped_tags: BTreeMap<LanguageTag, u64>,
    pub unmapped_editions: Vec<String>,
    pub warnings: Warnings,
}

fn load_languoids(cfg: &RunConfig, warnings: &mut Warnings) -> Result<(WalsIndex, CodeBridge), PipelineError> {
    let wals = load_wals(&cfg.wals_languoids, cfg.written_filter, cfg.wals_written.as_deref())?;
    warnings.extend(wals.warnings);
    let mut bridge = match &cfg.bridge_iso {
        Some(p) => CodeBridge::load(p)?,
        None => CodeBridge::default(),
    };
    if let Some(p) = &cfg.bridge_overrides {
        bridge = bridge.load_overrides(p)?;
    }
    Ok((wals.index, bridge))
}

fn rows_for(rows: &[CountRow], source: &SourceId) -> BTreeMap<LanguageTag, u64> {
    rows.iter()
        .filter(|r| &r.source == source)
        .map(|r| (r.tag.clone(), r.count))
        .collect()
}

fn source_tag_counts(
    cfg: &RunConfig,
    transport: &Arc<dyn Transport>,
    warnings: &mut Warnings,
) -> Result<BTreeMap<SourceId, BTreeMap<LanguageTag, u64>>, PipelineError> {
    let mut loaded: BTreeMap<PathBuf, Vec<CountRow>> = BTreeMap::new();
    let mut load = |path: PathBuf| -> Result<Vec<CountRow>, PipelineError> {
        if let Some(rows) = loaded.get(&path) {
            return Ok(rows.clone());
        }
        if !path.exists() {
            return Err(PipelineError::input(
                &path,
                "counts table not found (run `count` first for dump sources)",
            ));
        }
        let rows = load_counts_csv(&path)?;
        loaded.insert(path, rows.clone());
        Ok(rows)
    };

    let mut out = BTreeMap::new();
    for (source, input) in &cfg.sources {
        let counts = match input {
            SourceInput::Dump(_) => rows_for(&load(cfg.counts_csv())?, source),
            SourceInput::Counts(path) => {
                let counts = rows_for(&load(path.clone())?, source);
                if counts.is_empty() {
                    warnings.push(format!("{}: no rows for source `{source}`", path.display()));
                }
                counts
            }
            SourceInput::Sparql { endpoint, query, tags } => {
                let client = SparqlClient::new(endpoint.clone(), transport.clone())
                    .map_err(|e| PipelineError::Fetch(format!("{source}: {e}")))?;
                let batch = client.fetch_language_counts(query, tags);
                for (tag, e) in &batch.errors {
                    warnings.push(format!("{source}: {tag}: {e}"));
                }
                if !tags.is_empty() && batch.ok.is_empty() {
                    return Err(PipelineError::Fetch(format!(
                        "{source}: all {} SPARQL queries failed",
                        tags.len()
                    )));
                }
                batch.ok
            }
        };
        out.insert(source.clone(), counts);
    }
    Ok(out)
}

/// Folds counts and article numbers onto languoids and writes
/// `coverage.json` and `unmapped_tags.csv`.
pub fn cmd_build(cfg: &RunConfig, transport: Arc<dyn Transport>) -> Result<BuildOutcome, PipelineError> {
    let mut warnings = Vec::new();
    let (wals, bridge) = load_languoids(cfg, &mut warnings)?;
    let tag_counts = source_tag_counts(cfg, &transport, &mut warnings)?;

    let mut per_source = BTreeMap::new();
    let mut unmapped_tags: BTreeMap<LanguageTag, u64> = BTreeMap::new();
    for (source, counts) in &tag_counts {
        let folded = fold_counts_by_languoid(counts, &wals, &bridge);
        log::info!(
            "{source}: {} entities mapped, {} unmapped",
            folded.mapped_total(),
            folded.unmapped_total()
        );
        for (tag, n) in folded.unmapped {
            *unmapped_tags.entry(tag).or_insert(0) += n;
        }
        per_source.insert(source.clone(), folded.mapped);
    }

    let articles_path = cfg.articles_csv();
    let articles = load_article_counts_csv(&articles_path)?;
    let mut article_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut unmapped_editions = Vec::new();
    for (edition, &n) in &articles {
        let languoid = normalize_tag(edition)
            .ok()
            .and_then(|tag| map_tag_to_languoid(&tag, &wals, &bridge));
        match languoid {
            Some(l) => *article_counts.entry(l.wals_code.clone()).or_insert(0) += n,
            None => unmapped_editions.push(edition.clone()),
        }
    }
    if !unmapped_editions.is_empty() {
        log::info!("editions without a languoid: {}", unmapped_editions.join(", "));
    }

    let table = build_coverage_table(&per_source, &article_counts, &wals)?;
    let json = table
        .to_json()
        .map_err(|e| PipelineError::input(&cfg.coverage_json(), e))?;
    write_output(&cfg.coverage_json(), |w| Ok(w.write_all(json.as_bytes())?))?;
    write_output(&cfg.unmapped_csv(), |w| Ok(write_unmapped_csv(w, &unmapped_tags)?))?;
    Ok(BuildOutcome {
        table,
        unmapped_tags,
        unmapped_editions,
        warnings,
    })
}

pub fn load_coverage_table(path: &Path) -> Result<CoverageTable, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    CoverageTable::from_json(&text).map_err(|e| PipelineError::input(path, e))
}

/// Reads a `wals_code,label` reference partition.
pub fn load_reference_labels(path: &Path) -> Result<ReferenceLabels, PipelineError> {
    let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr.headers().map_err(|e| PipelineError::input(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| PipelineError::input(path, format!("missing column `{name}`")))
    };
    let (code_col, label_col) = (col("wals_code")?, col("label")?);
    let mut labels = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| PipelineError::input(path, e))?;
        let code = record.get(code_col).unwrap_or_default().trim().to_string();
        let label = record.get(label_col).unwrap_or_default().trim().to_string();
        if labels.insert(code.clone(), label).is_some() {
            return Err(PipelineError::input(path, format!("duplicate wals_code `{code}`")));
        }
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(ReferenceLabels { name, labels })
}

#[derive(Debug)]
pub struct AnalyzeOutcome {
    pub report: RunReport,
    pub warnings: Warnings,
}

/// Analyzes `coverage.json` and writes `report.json`, `report.csv` and
/// `scatter.tsv`.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<AnalyzeOutcome, PipelineError> {
    let table = load_coverage_table(&cfg.coverage_json())?;
    let reference = cfg
        .analysis
        .reference
        .as_deref()
        .map(load_reference_labels)
        .transpose()?;
    let report = analyze_table(&table, &cfg.analysis, reference.as_ref(), cfg.echo.clone())?;
    let json = report
        .to_json()
        .map_err(|e| PipelineError::input(&cfg.report_json(), e))?;
    write_output(&cfg.report_json(), |w| Ok(w.write_all(json.as_bytes())?))?;
    write_output(&cfg.report_csv(), |w| Ok(report.write_csv(w)?))?;
    write_output(&cfg.scatter_tsv(), |w| Ok(report.write_scatter_tsv(w)?))?;
    let warnings = report.metadata.warnings.clone();
    Ok(AnalyzeOutcome { report, warnings })
}

/// Full pipeline: count (when dumps are configured), fetch-wiki (when
/// editions are configured), build and analyze.
pub fn run_report(cfg: &RunConfig, transport: Arc<dyn Transport>) -> Result<AnalyzeOutcome, PipelineError> {
    let mut warnings = Vec::new();
    if cfg.has_dump_sources() {
        warnings.extend(cmd_count(cfg)?.warnings);
    }
    if matches!(cfg.articles, ArticleSource::Api { .. }) {
        warnings.extend(cmd_fetch_wiki(cfg, transport.clone())?.warnings);
    }
    warnings.extend(cmd_build(cfg, transport)?.warnings);
    let outcome = cmd_analyze(cfg)?;
    warnings.extend(outcome.warnings);
    Ok(AnalyzeOutcome {
        report: outcome.report,
        warnings,
    })
}
