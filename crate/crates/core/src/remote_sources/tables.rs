//! CSV inputs and outputs for counts and article statistics.
//!
//! All writers emit UTF-8 with LF line endings.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::FetchError;
use crate::coverage::SourceId;
use crate::langcodes::{normalize_tag, LanguageTag};

pub const COUNTS_HEADER: [&str; 3] = ["source", "language_tag", "entity_count"];
pub const ARTICLES_HEADER: [&str; 2] = ["edition", "articles"];

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{path}:{line}: invalid count `{value}`")]
    InvalidCount {
        path: String,
        line: u64,
        value: String,
    },
    #[error("{path}:{line}: invalid value `{value}`")]
    InvalidValue {
        path: String,
        line: u64,
        value: String,
    },
    #[error("{path}:{line}: duplicate key `{key}`")]
    DuplicateKey { path: String, line: u64, key: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CountRow {
    pub source: SourceId,
    pub tag: LanguageTag,
    pub count: u64,
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn open(path: &Path) -> Result<std::fs::File, TableError> {
    std::fs::File::open(path).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn checked_reader<R: Read>(
    reader: R,
    path: &str,
    expected: &[&str],
) -> Result<csv::Reader<R>, TableError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers().map_err(|source| TableError::Csv {
        path: path.to_string(),
        source,
    })?;
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != expected {
        return Err(TableError::Header {
            path: path.to_string(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(rdr)
}

fn parse_count(value: &str, path: &str, line: u64) -> Result<u64, TableError> {
    value.trim().parse::<u64>().map_err(|_| TableError::InvalidCount {
        path: path.to_string(),
        line,
        value: value.to_string(),
    })
}

pub fn load_counts_csv(path: &Path) -> Result<Vec<CountRow>, TableError> {
    read_counts_csv(open(path)?, &path.display().to_string())
}

/// Parses a `source,language_tag,entity_count` table. Tags are lowercased
/// and duplicate (source, tag) pairs are rejected.
pub fn read_counts_csv<R: Read>(reader: R, path: &str) -> Result<Vec<CountRow>, TableError> {
    let mut rdr = checked_reader(reader, path, &COUNTS_HEADER)?;
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|source| TableError::Csv {
            path: path.to_string(),
            source,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let invalid = |value: &str| TableError::InvalidValue {
            path: path.to_string(),
            line,
            value: value.to_string(),
        };
        let source = SourceId::new(record[0].trim()).map_err(|_| invalid(&record[0]))?;
        let tag = normalize_tag(&record[1]).map_err(|_| invalid(&record[1]))?;
        let count = parse_count(&record[2], path, line)?;
        if !seen.insert((source.clone(), tag.clone())) {
            return Err(TableError::DuplicateKey {
                path: path.to_string(),
                line,
                key: format!("{source},{tag}"),
            });
        }
        rows.push(CountRow { source, tag, count });
    }
    Ok(rows)
}

pub fn write_counts_csv<W: Write>(out: W, rows: &[CountRow]) -> Result<(), csv::Error> {
    let mut wtr = csv_writer(out);
    wtr.write_record(COUNTS_HEADER)?;
    for row in rows {
        wtr.write_record([
            row.source.as_str(),
            row.tag.canonical(),
            &row.count.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_article_counts_csv(path: &Path) -> Result<BTreeMap<String, u64>, TableError> {
    read_article_counts_csv(open(path)?, &path.display().to_string())
}

/// Parses an `edition,articles` table; edition codes are lowercased.
pub fn read_article_counts_csv<R: Read>(
    reader: R,
    path: &str,
) -> Result<BTreeMap<String, u64>, TableError> {
    let mut rdr = checked_reader(reader, path, &ARTICLES_HEADER)?;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|source| TableError::Csv {
            path: path.to_string(),
            source,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let edition = record[0].trim().to_ascii_lowercase();
        if edition.is_empty() {
            return Err(TableError::InvalidValue {
                path: path.to_string(),
                line,
                value: String::new(),
            });
        }
        let count = parse_count(&record[1], path, line)?;
        if out.insert(edition.clone(), count).is_some() {
            return Err(TableError::DuplicateKey {
                path: path.to_string(),
                line,
                key: edition,
            });
        }
    }
    Ok(out)
}

pub fn write_article_counts_csv<W: Write>(
    out: W,
    counts: &BTreeMap<String, u64>,
) -> Result<(), csv::Error> {
    let mut wtr = csv_writer(out);
    wtr.write_record(ARTICLES_HEADER)?;
    for (edition, n) in counts {
        wtr.write_record([edition.as_str(), &n.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Per-key failure sidecar: `key,error`.
pub fn write_fetch_errors_csv<W: Write, K: std::fmt::Display>(
    out: W,
    key_column: &str,
    errors: &BTreeMap<K, FetchError>,
) -> Result<(), csv::Error> {
    let mut wtr = csv_writer(out);
    wtr.write_record([key_column, "error"])?;
    for (key, err) in errors {
        wtr.write_record([key.to_string(), err.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
