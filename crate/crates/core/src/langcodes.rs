//! Language tag normalization and mapping onto WALS languoids.
//!
//! Raw BCP-47 tags coming out of RDF dumps (or Wikipedia edition codes) are
//! case-folded, reduced to their primary subtag and resolved against a WALS
//! languoid index, either directly (3-letter subtags) or through an
//! ISO 639-1 to ISO 639-3 bridge table. Tags that cannot be resolved are kept
//! with their counts so they can be reported.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LangError {
    #[error("empty language tag")]
    EmptyTag,
    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{path}: duplicate wals_code `{code}`")]
    DuplicateWalsCode { path: String, code: String },
    #[error("{path}: duplicate key `{key}`")]
    DuplicateKey { path: String, key: String },
    #[error("{path}: invalid value `{value}` in column `{column}`")]
    InvalidValue {
        path: String,
        column: String,
        value: String,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A case-folded BCP-47 language tag.
///
/// Nonstandard primary subtags (not 2-3 ASCII letters) are accepted and
/// flagged through [`LanguageTag::is_standard`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LanguageTag {
    canonical: String,
    primary_len: usize,
}

impl LanguageTag {
    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    pub fn primary_subtag(&self) -> &str {
        &self.canonical[..self.primary_len]
    }

    pub fn subtags(&self) -> impl Iterator<Item = &str> {
        self.canonical.split('-')
    }

    pub fn is_standard(&self) -> bool {
        let primary = self.primary_subtag();
        (2..=3).contains(&primary.len()) && primary.bytes().all(|b| b.is_ascii_lowercase())
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

impl std::str::FromStr for LanguageTag {
    type Err = LangError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_tag(s)
    }
}

impl Serialize for LanguageTag {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical)
    }
}

impl<'de> Deserialize<'de> for LanguageTag {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        normalize_tag(&raw).map_err(serde::de::Error::custom)
    }
}

/// Lowercases `raw` and splits off the primary subtag.
pub fn normalize_tag(raw: &str) -> Result<LanguageTag, LangError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(LangError::EmptyTag);
    }
    let canonical = trimmed.to_ascii_lowercase();
    let primary_len = canonical.find('-').unwrap_or(canonical.len());
    Ok(LanguageTag {
        canonical,
        primary_len,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Languoid {
    pub wals_code: String,
    pub name: String,
    pub iso639_3: Option<String>,
    pub is_written: bool,
}

/// Written languoids of WALS, indexed by ISO 639-3 code.
#[derive(Debug, Clone, Default)]
pub struct WalsIndex {
    all: Vec<Languoid>,
    by_wals: BTreeMap<String, usize>,
    by_iso: BTreeMap<String, usize>,
}

impl WalsIndex {
    /// Builds an index from languoids. Duplicate wals codes are rejected;
    /// when several languoids share an ISO code the first one wins.
    pub fn from_languoids(languoids: Vec<Languoid>) -> Result<Self, LangError> {
        let mut index = WalsIndex::default();
        for languoid in languoids {
            index.push(languoid, "<memory>")?;
        }
        Ok(index)
    }

    fn push(&mut self, languoid: Languoid, path: &str) -> Result<(), LangError> {
        if self.by_wals.contains_key(&languoid.wals_code) {
            return Err(LangError::DuplicateWalsCode {
                path: path.to_string(),
                code: languoid.wals_code,
            });
        }
        let pos = self.all.len();
        self.by_wals.insert(languoid.wals_code.clone(), pos);
        if let Some(iso) = &languoid.iso639_3 {
            if self.by_iso.contains_key(iso) {
                log::debug!(
                    "iso639-3 `{iso}` shared by several languoids; keeping the first, `{}` not indexed",
                    languoid.wals_code
                );
            } else {
                self.by_iso.insert(iso.clone(), pos);
            }
        }
        self.all.push(languoid);
        Ok(())
    }

    pub fn all(&self) -> &[Languoid] {
        &self.all
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }

    pub fn get(&self, wals_code: &str) -> Option<&Languoid> {
        self.by_wals.get(wals_code).map(|&i| &self.all[i])
    }

    pub fn by_iso(&self, iso639_3: &str) -> Option<&Languoid> {
        self.by_iso.get(iso639_3).map(|&i| &self.all[i])
    }

    pub fn iso_codes(&self) -> impl Iterator<Item = &str> {
        self.by_iso.keys().map(String::as_str)
    }
}

/// Result of loading a WALS languoid table.
#[derive(Debug)]
pub struct WalsLoad {
    pub index: WalsIndex,
    pub warnings: Vec<String>,
}

const WALS_CODE_COLUMNS: &[&str] = &["wals_code", "id"];
const NAME_COLUMNS: &[&str] = &["name"];
const ISO_COLUMNS: &[&str] = &["iso639_3", "iso639p3code", "iso_code"];
const WRITTEN_COLUMNS: &[&str] = &["written", "is_written"];

fn find_column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
}

fn parse_bool(value: &str) -> Option<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Some(true),
        "false" | "0" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// Loads a WALS languoid CSV.
///
/// Writtenness comes from a `written` column when the table has one,
/// otherwise from `written_list` (one wals code per line). With
/// `written_filter` set, unwritten languoids are dropped. If neither
/// source is available every languoid is kept and a warning is returned.
pub fn load_wals(
    path: &Path,
    written_filter: bool,
    written_list: Option<&Path>,
) -> Result<WalsLoad, LangError> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| LangError::Io {
        path: display.clone(),
        source,
    })?;
    let companion = match written_list {
        Some(p) => Some(load_written_list(p)?),
        None => None,
    };
    load_wals_from_reader(file, &display, written_filter, companion.as_ref())
}

pub fn load_wals_from_reader<R: Read>(
    reader: R,
    path: &str,
    written_filter: bool,
    written_list: Option<&BTreeSet<String>>,
) -> Result<WalsLoad, LangError> {
    let csv_err = |source| LangError::Csv {
        path: path.to_string(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let missing = |column: &str| LangError::MissingColumn {
        path: path.to_string(),
        column: column.to_string(),
    };
    let code_col = find_column(&headers, WALS_CODE_COLUMNS).ok_or_else(|| missing("wals_code"))?;
    let name_col = find_column(&headers, NAME_COLUMNS).ok_or_else(|| missing("name"))?;
    let iso_col = find_column(&headers, ISO_COLUMNS).ok_or_else(|| missing("iso639_3"))?;
    let written_col = find_column(&headers, WRITTEN_COLUMNS);

    let mut warnings = Vec::new();
    if written_filter && written_col.is_none() && written_list.is_none() {
        warnings.push(format!(
            "{path}: no writtenness information; all WALS languoids treated as in scope"
        ));
    }

    let mut index = WalsIndex::default();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let wals_code = record[code_col].trim().to_string();
        if wals_code.is_empty() {
            return Err(LangError::InvalidValue {
                path: path.to_string(),
                column: "wals_code".into(),
                value: String::new(),
            });
        }
        let iso = record[iso_col].trim().to_ascii_lowercase();
        let iso639_3 = if iso.is_empty() {
            None
        } else if iso.len() == 3 && iso.bytes().all(|b| b.is_ascii_lowercase()) {
            Some(iso)
        } else {
            return Err(LangError::InvalidValue {
                path: path.to_string(),
                column: "iso639_3".into(),
                value: iso,
            });
        };
        let is_written = match (written_col, written_list) {
            (Some(col), _) => {
                parse_bool(&record[col]).ok_or_else(|| LangError::InvalidValue {
                    path: path.to_string(),
                    column: "written".into(),
                    value: record[col].to_string(),
                })?
            }
            (None, Some(list)) => list.contains(&wals_code),
            (None, None) => true,
        };
        if written_filter && !is_written {
            // still reject duplicates among skipped rows
            if index.by_wals.contains_key(&wals_code) {
                return Err(LangError::DuplicateWalsCode {
                    path: path.to_string(),
                    code: wals_code,
                });
            }
            continue;
        }
        index.push(
            Languoid {
                wals_code,
                name: record[name_col].trim().to_string(),
                iso639_3,
                is_written,
            },
            path,
        )?;
    }
    Ok(WalsLoad { index, warnings })
}

/// Reads a companion list of written languoids, one wals code per line.
pub fn load_written_list(path: &Path) -> Result<BTreeSet<String>, LangError> {
    let text = std::fs::read_to_string(path).map_err(|source| LangError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// ISO 639-1 to 639-3 bridge plus manual overrides for irregular codes
/// (Wikipedia editions like `simple` or `be-tarask`).
#[derive(Debug, Clone, Default)]
pub struct CodeBridge {
    iso1_to_iso3: BTreeMap<String, String>,
    overrides: BTreeMap<String, String>,
}

impl CodeBridge {
    pub fn new(iso1_to_iso3: BTreeMap<String, String>) -> Self {
        CodeBridge {
            iso1_to_iso3,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_overrides(mut self, overrides: BTreeMap<String, String>) -> Self {
        self.overrides = overrides;
        self
    }

    pub fn iso3_for(&self, iso1: &str) -> Option<&str> {
        self.iso1_to_iso3.get(iso1).map(String::as_str)
    }

    /// Loads an `iso1,iso3` CSV.
    pub fn load(path: &Path) -> Result<Self, LangError> {
        Ok(CodeBridge::new(load_pair_csv(path, "iso1", "iso3")?))
    }

    /// Loads a `code,iso3` override CSV matched against full canonical tags.
    pub fn load_overrides(self, path: &Path) -> Result<Self, LangError> {
        let overrides = load_pair_csv(path, "code", "iso3")?;
        Ok(self.with_overrides(overrides))
    }
}

fn load_pair_csv(
    path: &Path,
    key_col: &str,
    value_col: &str,
) -> Result<BTreeMap<String, String>, LangError> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| LangError::Io {
        path: display.clone(),
        source,
    })?;
    read_pair_csv(file, &display, key_col, value_col)
}

pub(crate) fn read_pair_csv<R: Read>(
    reader: R,
    path: &str,
    key_col: &str,
    value_col: &str,
) -> Result<BTreeMap<String, String>, LangError> {
    let csv_err = |source| LangError::Csv {
        path: path.to_string(),
        source,
    };
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let missing = |column: &str| LangError::MissingColumn {
        path: path.to_string(),
        column: column.to_string(),
    };
    let k = find_column(&headers, &[key_col]).ok_or_else(|| missing(key_col))?;
    let v = find_column(&headers, &[value_col]).ok_or_else(|| missing(value_col))?;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let key = record[k].trim().to_ascii_lowercase();
        let value = record[v].trim().to_ascii_lowercase();
        if key.is_empty() || value.is_empty() {
            continue;
        }
        if out.insert(key.clone(), value).is_some() {
            return Err(LangError::DuplicateKey {
                path: path.to_string(),
                key,
            });
        }
    }
    Ok(out)
}

/// Resolves a tag to a languoid, folding region/script variants onto the
/// primary subtag.
pub fn map_tag_to_languoid<'a>(
    tag: &LanguageTag,
    idx: &'a WalsIndex,
    bridge: &CodeBridge,
) -> Option<&'a Languoid> {
    if let Some(iso3) = bridge
        .overrides
        .get(tag.canonical())
        .or_else(|| bridge.overrides.get(tag.primary_subtag()))
    {
        return idx.by_iso(iso3);
    }
    let primary = tag.primary_subtag();
    match primary.len() {
        3 => idx.by_iso(primary),
        2 => bridge.iso3_for(primary).and_then(|iso3| idx.by_iso(iso3)),
        _ => None,
    }
}

/// Tag counts folded onto languoids, keyed by wals code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FoldedCounts {
    pub mapped: BTreeMap<String, u64>,
    pub unmapped: BTreeMap<LanguageTag, u64>,
}

impl FoldedCounts {
    pub fn mapped_total(&self) -> u64 {
        self.mapped.values().sum()
    }

    pub fn unmapped_total(&self) -> u64 {
        self.unmapped.values().sum()
    }
}

pub fn fold_counts_by_languoid(
    tag_counts: &BTreeMap<LanguageTag, u64>,
    idx: &WalsIndex,
    bridge: &CodeBridge,
) -> FoldedCounts {
    let mut folded = FoldedCounts::default();
    for (tag, &count) in tag_counts {
        match map_tag_to_languoid(tag, idx, bridge) {
            Some(languoid) => {
                *folded.mapped.entry(languoid.wals_code.clone()).or_insert(0) += count;
            }
            None => {
                log::debug!("unmapped language tag `{tag}` ({count})");
                *folded.unmapped.entry(tag.clone()).or_insert(0) += count;
            }
        }
    }
    folded
}

/// Writes the `language_tag,count` unmapped-tags report.
pub fn write_unmapped_csv<W: std::io::Write>(
    out: W,
    unmapped: &BTreeMap<LanguageTag, u64>,
) -> Result<(), csv::Error> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    wtr.write_record(["language_tag", "count"])?;
    for (tag, count) in unmapped {
        wtr.write_record([tag.canonical(), &count.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
