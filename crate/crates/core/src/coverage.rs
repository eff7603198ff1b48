//! Per-languoid coverage table.
//!
//! Holds the entity count of every source and the Wikipedia article count
//! for each WALS languoid, and derives the sets L^LOD (aggregated entity
//! count > 0), L^TXT (article count > 0) and their intersection L*.
//! Sources are aggregated by plain summation: entities are assumed to be
//! distinct across sources (no deduplication).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::langcodes::WalsIndex;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoverageError {
    #[error("languoid `{wals_code}` (from {origin}) is not in the WALS index")]
    UnknownLanguoid { wals_code: String, origin: String },
    #[error("unknown source `{0}`")]
    UnknownSource(String),
    #[error("empty source name")]
    EmptySource,
    #[error("record `{wals_code}` has counts for undeclared source `{source_name}`")]
    UndeclaredSource {
        wals_code: String,
        source_name: String,
    },
    #[error("record key `{key}` does not match its wals_code `{wals_code}`")]
    KeyMismatch { key: String, wals_code: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SourceId(String);

impl SourceId {
    pub fn new(name: impl Into<String>) -> Result<Self, CoverageError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(CoverageError::EmptySource);
        }
        Ok(SourceId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SourceId {
    type Error = CoverageError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        SourceId::new(value)
    }
}

impl From<SourceId> for String {
    fn from(id: SourceId) -> String {
        id.0
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub wals_code: String,
    pub name: String,
    pub entity_counts: BTreeMap<SourceId, u64>,
    /// Absent when no considered Wikipedia edition maps to the languoid.
    pub article_count: Option<u64>,
}

impl CoverageRecord {
    /// Sum over `selected`; sources missing from the record contribute 0.
    pub fn entity_sum<'a>(&self, selected: impl IntoIterator<Item = &'a SourceId>) -> u64 {
        selected
            .into_iter()
            .map(|s| self.entity_counts.get(s).copied().unwrap_or(0))
            .sum()
    }

    pub fn has_text(&self) -> bool {
        self.article_count.is_some_and(|n| n > 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SerializedTable", into = "SerializedTable")]
pub struct CoverageTable {
    sources: Vec<SourceId>,
    records: BTreeMap<String, CoverageRecord>,
}

#[derive(Serialize, Deserialize)]
struct SerializedTable {
    sources: Vec<SourceId>,
    records: Vec<CoverageRecord>,
}

impl From<CoverageTable> for SerializedTable {
    fn from(t: CoverageTable) -> Self {
        SerializedTable {
            sources: t.sources,
            records: t.records.into_values().collect(),
        }
    }
}

impl TryFrom<SerializedTable> for CoverageTable {
    type Error = CoverageError;

    fn try_from(s: SerializedTable) -> Result<Self, Self::Error> {
        let records = s
            .records
            .into_iter()
            .map(|r| (r.wals_code.clone(), r))
            .collect();
        CoverageTable::from_parts(s.sources, records)
    }
}

/// Languages in L* with their entity and article counts, aligned by
/// ascending wals code.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Distributions {
    pub langs: Vec<String>,
    pub entities: Vec<u64>,
    pub articles: Vec<u64>,
}

impl Distributions {
    pub fn len(&self) -> usize {
        self.langs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.langs.is_empty()
    }
}

impl CoverageTable {
    /// Assembles a table from already-validated parts, checking invariants.
    pub fn from_parts(
        sources: Vec<SourceId>,
        records: BTreeMap<String, CoverageRecord>,
    ) -> Result<Self, CoverageError> {
        let declared: BTreeSet<&SourceId> = sources.iter().collect();
        for (key, record) in &records {
            if key != &record.wals_code {
                return Err(CoverageError::KeyMismatch {
                    key: key.clone(),
                    wals_code: record.wals_code.clone(),
                });
            }
            if let Some(s) = record.entity_counts.keys().find(|s| !declared.contains(s)) {
                return Err(CoverageError::UndeclaredSource {
                    wals_code: record.wals_code.clone(),
                    source_name: s.to_string(),
                });
            }
        }
        let mut sources = sources;
        sources.sort();
        sources.dedup();
        Ok(CoverageTable { sources, records })
    }

    pub fn sources(&self) -> &[SourceId] {
        &self.sources
    }

    pub fn records(&self) -> impl Iterator<Item = &CoverageRecord> {
        self.records.values()
    }

    pub fn get(&self, wals_code: &str) -> Option<&CoverageRecord> {
        self.records.get(wals_code)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn check_selected(&self, selected: &[SourceId]) -> Result<(), CoverageError> {
        match selected.iter().find(|s| !self.sources.contains(s)) {
            Some(s) => Err(CoverageError::UnknownSource(s.to_string())),
            None => Ok(()),
        }
    }

    /// Summed entity count of `record` over `selected` sources.
    pub fn aggregate_entity_count(
        &self,
        record: &CoverageRecord,
        selected: &[SourceId],
    ) -> Result<u64, CoverageError> {
        self.check_selected(selected)?;
        Ok(record.entity_sum(selected))
    }

    pub fn l_lod(&self, selected: &[SourceId]) -> Result<BTreeSet<String>, CoverageError> {
        self.check_selected(selected)?;
        Ok(self
            .records
            .values()
            .filter(|r| r.entity_sum(selected) > 0)
            .map(|r| r.wals_code.clone())
            .collect())
    }

    pub fn l_txt(&self) -> BTreeSet<String> {
        self.records
            .values()
            .filter(|r| r.has_text())
            .map(|r| r.wals_code.clone())
            .collect()
    }

    pub fn l_star(&self, selected: &[SourceId]) -> Result<BTreeSet<String>, CoverageError> {
        let lod = self.l_lod(selected)?;
        let txt = self.l_txt();
        Ok(lod.intersection(&txt).cloned().collect())
    }

    pub fn in_l_star(&self, record: &CoverageRecord, selected: &[SourceId]) -> bool {
        record.entity_sum(selected) > 0 && record.has_text()
    }

    /// D_E and D_W over L*, ordered by ascending wals code.
    pub fn distributions(&self, selected: &[SourceId]) -> Result<Distributions, CoverageError> {
        self.check_selected(selected)?;
        let mut out = Distributions::default();
        for record in self.records.values() {
            if self.in_l_star(record, selected) {
                out.langs.push(record.wals_code.clone());
                out.entities.push(record.entity_sum(selected));
                out.articles.push(record.article_count.unwrap_or(0));
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Assembles the coverage table: one record per WALS languoid, with the
/// given entity and article counts (keyed by wals code) attached.
pub fn build_coverage_table(
    per_source_counts: &BTreeMap<SourceId, BTreeMap<String, u64>>,
    article_counts: &BTreeMap<String, u64>,
    wals: &WalsIndex,
) -> Result<CoverageTable, CoverageError> {
    let mut records: BTreeMap<String, CoverageRecord> = wals
        .all()
        .iter()
        .map(|l| {
            (
                l.wals_code.clone(),
                CoverageRecord {
                    wals_code: l.wals_code.clone(),
                    name: l.name.clone(),
                    entity_counts: BTreeMap::new(),
                    article_count: None,
                },
            )
        })
        .collect();

    for (source, counts) in per_source_counts {
        for (wals_code, &n) in counts {
            let record =
                records
                    .get_mut(wals_code)
                    .ok_or_else(|| CoverageError::UnknownLanguoid {
                        wals_code: wals_code.clone(),
                        origin: format!("source {source}"),
                    })?;
            record.entity_counts.insert(source.clone(), n);
        }
    }
    for (wals_code, &n) in article_counts {
        let record = records
            .get_mut(wals_code)
            .ok_or_else(|| CoverageError::UnknownLanguoid {
                wals_code: wals_code.clone(),
                origin: "article counts".into(),
            })?;
        record.article_count = Some(n);
    }
    CoverageTable::from_parts(per_source_counts.keys().cloned().collect(), records)
}
