//! Language coverage of Linked Open Data knowledge graphs.
//!
//! Counts language-tagged entities in RDF dumps, collects Wikipedia article
//! counts per edition, folds both onto WALS languoids and runs the coverage
//! analysis: k-means clustering with Joshi labels, NMI against reference
//! labels, quartile-based resource categories and divergence classes.

pub mod langcodes;
pub mod rdf_ingest;
pub mod coverage;
pub mod analysis;
pub mod remote_sources;
pub mod pipeline;
