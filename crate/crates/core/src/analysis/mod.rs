//! Coverage analysis: log-scaled features, k-means with Joshi labels, NMI,
//! quartile-based resource categories and divergence classes.
//!
//! Everything here is a pure function of its inputs.

mod categorize;
mod features;
mod kmeans;
mod labels;
mod nmi;
mod quantile;

pub use categorize::{
    divergence, lod_categorize, Divergence, DivergenceClass, LodCategory, DEFAULT_TAU,
};
pub use features::{features_with, log_features, FeaturePoint, FeatureTransform};
pub use kmeans::{assign_nearest, kmeans, ClusterModel, KMeansParams};
pub use labels::{label_clusters, JoshiCategory};
pub use nmi::{entropy, nmi, NMI_NORMALIZATION};
pub use quantile::{quantile, quartiles, Quartiles, QUANTILE_METHOD};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("record `{0}` is outside L* (needs entities and articles)")]
    OutsideLStar(String),
    #[error("k-means needs at least k={k} points, got {n}")]
    TooFewPoints { k: usize, n: usize },
    #[error("invalid k-means parameter: {0}")]
    InvalidParams(String),
    #[error("cluster labeling needs k = 6, got {0}")]
    WrongK(usize),
    #[error("partitions cover different item sets")]
    KeyMismatch,
    #[error("empty input")]
    Empty,
    #[error("tau must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error(transparent)]
    Coverage(#[from] crate::coverage::CoverageError),
}
