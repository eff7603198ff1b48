use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::coverage::{CoverageRecord, SourceId};

/// A language placed on the (articles, entities) plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePoint {
    pub wals_code: String,
    /// Transformed article count.
    pub x: f64,
    /// Transformed entity count.
    pub y: f64,
}

impl FeaturePoint {
    pub fn coords(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureTransform {
    /// log10(1 + n)
    #[default]
    Log10,
    Raw,
}

impl FeatureTransform {
    pub fn apply(self, n: u64) -> f64 {
        match self {
            FeatureTransform::Log10 => (n as f64 + 1.0).log10(),
            FeatureTransform::Raw => n as f64,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            FeatureTransform::Log10 => "log10(1+n)",
            FeatureTransform::Raw => "raw counts",
        }
    }
}

/// Log-scaled features of a record in L*.
pub fn log_features(
    record: &CoverageRecord,
    selected: &[SourceId],
) -> Result<FeaturePoint, AnalysisError> {
    features_with(record, selected, FeatureTransform::Log10)
}

pub fn features_with(
    record: &CoverageRecord,
    selected: &[SourceId],
    transform: FeatureTransform,
) -> Result<FeaturePoint, AnalysisError> {
    let entities = record.entity_sum(selected);
    let articles = record.article_count.unwrap_or(0);
    if entities == 0 || articles == 0 {
        return Err(AnalysisError::OutsideLStar(record.wals_code.clone()));
    }
    Ok(FeaturePoint {
        wals_code: record.wals_code.clone(),
        x: transform.apply(articles),
        y: transform.apply(entities),
    })
}
