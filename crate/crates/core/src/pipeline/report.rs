//! Report rows, metadata and their JSON/CSV/TSV renderings.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    divergence, features_with, kmeans, label_clusters, lod_categorize, nmi, quartiles,
    AnalysisError, DivergenceClass, JoshiCategory, LodCategory, Quartiles, NMI_NORMALIZATION,
    QUANTILE_METHOD,
};
use crate::coverage::{CoverageTable, SourceId};

use super::config::AnalysisSettings;

/// Wikipedia statistic used as the article count of a language.
pub const ARTICLE_STATISTIC: &str = "siteinfo statistics.articles (content pages)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub wals_code: String,
    pub name: String,
    pub entity_counts: BTreeMap<SourceId, u64>,
    pub entities: u64,
    pub articles: Option<u64>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub cluster: Option<usize>,
    pub joshi: Option<JoshiCategory>,
    pub lod_category: LodCategory,
    pub divergence_score: Option<f64>,
    pub divergence_class: Option<DivergenceClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmiSummary {
    pub reference: String,
    pub common_languages: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool_version: String,
    pub config: BTreeMap<String, String>,
    pub sources: Vec<SourceId>,
    pub article_statistic: String,
    pub quantile_method: String,
    pub nmi_normalization: String,
    pub feature_transform: String,
    pub k: usize,
    pub seed: u64,
    pub tau: f64,
    pub l_lod: usize,
    pub l_txt: usize,
    pub l_star: usize,
    pub entity_quartiles: Option<Quartiles>,
    pub article_quartiles: Option<Quartiles>,
    pub category_histogram: BTreeMap<LodCategory, usize>,
    pub joshi_histogram: BTreeMap<JoshiCategory, usize>,
    pub inertia: Option<f64>,
    pub kmeans_iterations: Option<usize>,
    pub nmi: Option<NmiSummary>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<ReportRow>,
}

/// Reference partition used for NMI: a display name and labels per wals code.
pub struct ReferenceLabels {
    pub name: String,
    pub labels: BTreeMap<String, String>,
}

/// Runs the analysis over a coverage table. Degraded conditions (too few
/// languages to cluster, no overlap with the reference labels) become
/// warnings in the metadata rather than errors.
pub fn analyze_table(
    table: &CoverageTable,
    settings: &AnalysisSettings,
    reference: Option<&ReferenceLabels>,
    config_echo: BTreeMap<String, String>,
) -> Result<RunReport, AnalysisError> {
    if table.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let selected = table.sources().to_vec();
    let mut warnings = Vec::new();

    let dist = table.distributions(&selected)?;
    let (q_e, q_w) = if dist.is_empty() {
        warnings.push("L* is empty: every language is Missing".to_string());
        (None, None)
    } else {
        (Some(quartiles(&dist.entities)?), Some(quartiles(&dist.articles)?))
    };

    let mut points = Vec::new();
    for record in table.records() {
        if table.in_l_star(record, &selected) {
            points.push(features_with(record, &selected, settings.transform)?);
        }
    }

    let params = &settings.kmeans;
    let model = if points.is_empty() {
        None
    } else if points.len() < params.k {
        warnings.push(format!(
            "clustering skipped: |L*| = {} < k = {}",
            points.len(),
            params.k
        ));
        None
    } else {
        Some(kmeans(&points, params)?)
    };
    let clusters = model.as_ref().map(|m| m.assignment_map()).unwrap_or_default();
    let joshi = match &model {
        Some(m) if m.k == 6 => label_clusters(m)?,
        _ => BTreeMap::new(),
    };
    let point_map: BTreeMap<&str, _> = points.iter().map(|p| (p.wals_code.as_str(), p)).collect();

    let mut rows = Vec::with_capacity(table.len());
    for record in table.records() {
        let entities = table.aggregate_entity_count(record, &selected)?;
        let in_star = table.in_l_star(record, &selected);
        let lod_category = match (&q_e, &q_w) {
            (Some(qe), Some(qw)) => {
                lod_categorize(entities, record.article_count.unwrap_or(0), qe, qw, in_star)
            }
            _ => LodCategory::Missing,
        };
        let point = point_map.get(record.wals_code.as_str());
        let div = point.map(|p| divergence(p, settings.tau)).transpose()?;
        let cluster = clusters.get(&record.wals_code).copied();
        rows.push(ReportRow {
            wals_code: record.wals_code.clone(),
            name: record.name.clone(),
            entity_counts: selected
                .iter()
                .map(|s| (s.clone(), record.entity_counts.get(s).copied().unwrap_or(0)))
                .collect(),
            entities,
            articles: record.article_count,
            x: point.map(|p| p.x),
            y: point.map(|p| p.y),
            cluster,
            joshi: cluster.and_then(|c| joshi.get(&c).copied()),
            lod_category,
            divergence_score: div.map(|d| d.score),
            divergence_class: div.map(|d| d.class),
        });
    }

    let nmi_summary = match (reference, &model) {
        (Some(r), None) => {
            warnings.push(format!("NMI against {} skipped: no clustering", r.name));
            None
        }
        (Some(r), Some(_)) => {
            let produced: BTreeMap<&String, usize> = clusters
                .iter()
                .filter(|(k, _)| r.labels.contains_key(*k))
                .map(|(k, &c)| (k, c))
                .collect();
            let expected: BTreeMap<&String, &String> = r
                .labels
                .iter()
                .filter(|(k, _)| clusters.contains_key(*k))
                .collect();
            if produced.is_empty() {
                warnings.push(format!("NMI against {} skipped: no common languages", r.name));
                None
            } else {
                Some(NmiSummary {
                    reference: r.name.clone(),
                    common_languages: produced.len(),
                    value: nmi(&produced, &expected)?,
                })
            }
        }
        (None, _) => None,
    };

    let l_lod = table.l_lod(&selected)?.len();
    let metadata = ReportMetadata {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config_echo,
        sources: selected,
        article_statistic: ARTICLE_STATISTIC.to_string(),
        quantile_method: QUANTILE_METHOD.to_string(),
        nmi_normalization: NMI_NORMALIZATION.to_string(),
        feature_transform: settings.transform.describe().to_string(),
        k: params.k,
        seed: params.seed,
        tau: settings.tau,
        l_lod,
        l_txt: table.l_txt().len(),
        l_star: points.len(),
        entity_quartiles: q_e,
        article_quartiles: q_w,
        category_histogram: category_histogram(&rows),
        joshi_histogram: joshi_histogram(&rows),
        inertia: model.as_ref().map(|m| m.inertia),
        kmeans_iterations: model.as_ref().map(|m| m.iterations),
        nmi: nmi_summary,
        warnings,
    };
    Ok(RunReport { metadata, rows })
}

pub fn category_histogram(rows: &[ReportRow]) -> BTreeMap<LodCategory, usize> {
    let mut hist: BTreeMap<LodCategory, usize> = LodCategory::ALL.iter().map(|&c| (c, 0)).collect();
    for row in rows {
        *hist.entry(row.lod_category).or_insert(0) += 1;
    }
    hist
}

fn joshi_histogram(rows: &[ReportRow]) -> BTreeMap<JoshiCategory, usize> {
    let mut hist = BTreeMap::new();
    for j in rows.iter().filter_map(|r| r.joshi) {
        *hist.entry(j).or_insert(0) += 1;
    }
    hist
}

fn fmt_float(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl RunReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self).map(|mut s| {
            s.push('\n');
            s
        })
    }

    /// One row per languoid; per-source entity columns are `entities_<source>`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header = vec!["wals_code".to_string(), "name".to_string()];
        header.extend(self.metadata.sources.iter().map(|s| format!("entities_{s}")));
        header.extend(
            [
                "entities",
                "articles",
                "x",
                "y",
                "cluster",
                "joshi",
                "lod_category",
                "divergence_score",
                "divergence_class",
            ]
            .map(String::from),
        );
        wtr.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.wals_code.clone(), row.name.clone()];
            rec.extend(
                self.metadata
                    .sources
                    .iter()
                    .map(|s| row.entity_counts.get(s).copied().unwrap_or(0).to_string()),
            );
            rec.extend([
                row.entities.to_string(),
                fmt_opt(row.articles),
                fmt_float(row.x),
                fmt_float(row.y),
                fmt_opt(row.cluster),
                fmt_opt(row.joshi),
                row.lod_category.to_string(),
                fmt_float(row.divergence_score),
                fmt_opt(row.divergence_class),
            ]);
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Plot-ready points for languages in L*.
    pub fn write_scatter_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "wals_code\tx\ty\tcluster\tjoshi\tlod_category\tdivergence_class")?;
        for row in &self.rows {
            let (Some(x), Some(y)) = (row.x, row.y) else { continue };
            writeln!(
                out,
                "{}\t{x:.6}\t{y:.6}\t{}\t{}\t{}\t{}",
                row.wals_code,
                fmt_opt(row.cluster),
                fmt_opt(row.joshi),
                row.lod_category,
                fmt_opt(row.divergence_class),
            )?;
        }
        out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{FeatureTransform, KMeansParams, DEFAULT_TAU};
    use crate::coverage::build_coverage_table;
    use crate::langcodes::{Languoid, WalsIndex};

    fn settings(k: usize) -> AnalysisSettings {
        AnalysisSettings {
            kmeans: KMeansParams {
                k,
                ..KMeansParams::default()
            },
            tau: DEFAULT_TAU,
            transform: FeatureTransform::Log10,
            reference: None,
        }
    }

    /// Languages `l1..l8` with entities i and articles i, plus overrides.
    fn table(pairs: &[(u64, u64)], extra_missing: usize) -> CoverageTable {
        let n = pairs.len() + extra_missing;
        let codes: Vec<String> = (1..=n).map(|i| format!("l{i:02}")).collect();
        let idx = WalsIndex::from_languoids(
            codes
                .iter()
                .map(|c| Languoid {
                    wals_code: c.clone(),
                    name: c.to_uppercase(),
                    iso639_3: None,
                    is_written: true,
                })
                .collect(),
        )
        .unwrap();
        let src = SourceId::new("kg").unwrap();
        let ents = codes.iter().zip(pairs).map(|(c, &(e, _))| (c.clone(), e)).collect();
        let arts = codes.iter().zip(pairs).map(|(c, &(_, w))| (c.clone(), w)).collect();
        build_coverage_table(&[(src, ents)].into_iter().collect(), &arts, &idx).unwrap()
    }

    fn category(report: &RunReport, code: &str) -> LodCategory {
        report.rows.iter().find(|r| r.wals_code == code).unwrap().lod_category
    }

    #[test]
    fn quartile_fixture_categories() {
        // Entities and articles each take the values 1..8 (Q1 = 2.75, Q3 = 6.25).
        let pairs = [(2, 2), (4, 4), (7, 7), (1, 8), (8, 1), (3, 5), (5, 3), (6, 6)];
        let report = analyze_table(&table(&pairs, 1), &settings(6), None, BTreeMap::new()).unwrap();
        assert_eq!(category(&report, "l01"), LodCategory::Low);
        assert_eq!(category(&report, "l02"), LodCategory::Medium);
        assert_eq!(category(&report, "l03"), LodCategory::High);
        assert_eq!(category(&report, "l04"), LodCategory::Unclassified);
        assert_eq!(category(&report, "l09"), LodCategory::Missing);
        assert_eq!(report.rows.len(), 9);
        let hist = &report.metadata.category_histogram;
        assert_eq!(hist.values().sum::<usize>(), report.rows.len());
        assert_eq!(hist, &category_histogram(&report.rows));
        assert_eq!(report.metadata.l_star, 8);
        assert_eq!(report.metadata.joshi_histogram.values().sum::<usize>(), 8);
        assert!(report.metadata.warnings.is_empty());
    }

    #[test]
    fn too_few_languages_skips_clustering() {
        let report =
            analyze_table(&table(&[(10, 100), (1000, 5), (3, 3)], 0), &settings(6), None, BTreeMap::new())
                .unwrap();
        assert!(report.metadata.warnings.iter().any(|w| w.contains("clustering skipped")));
        assert!(report.rows.iter().all(|r| r.cluster.is_none() && r.x.is_some()));
        assert!(report.rows.iter().all(|r| r.lod_category != LodCategory::Missing));
    }

    #[test]
    fn empty_l_star_is_all_missing() {
        let report = analyze_table(&table(&[(0, 5), (5, 0)], 2), &settings(6), None, BTreeMap::new()).unwrap();
        assert!(report.rows.iter().all(|r| r.lod_category == LodCategory::Missing));
        assert_eq!(report.metadata.category_histogram[&LodCategory::Missing], 4);
    }

    #[test]
    fn reference_identical_to_clusters_gives_nmi_one() {
        let pairs: Vec<(u64, u64)> = (0..12).map(|i| (10u64.pow(i % 6), 10u64.pow((i % 3) + 1))).collect();
        let t = table(&pairs, 0);
        let first = analyze_table(&t, &settings(3), None, BTreeMap::new()).unwrap();
        let labels = first
            .rows
            .iter()
            .map(|r| (r.wals_code.clone(), format!("c{}", r.cluster.unwrap())))
            .collect();
        let reference = ReferenceLabels {
            name: "ref.csv".into(),
            labels,
        };
        let report = analyze_table(&t, &settings(3), Some(&reference), BTreeMap::new()).unwrap();
        let nmi = report.metadata.nmi.unwrap();
        assert_eq!(nmi.common_languages, 12);
        assert!((nmi.value - 1.0).abs() < 1e-12);
        assert!(report.rows.iter().all(|r| r.joshi.is_none()));
    }

    #[test]
    fn renderings() {
        let report = analyze_table(&table(&[(9, 99), (0, 3)], 0), &settings(1), None, BTreeMap::new()).unwrap();
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "wals_code,name,entities_kg,entities,articles,x,y,cluster,joshi,lod_category,divergence_score,divergence_class\n\
             l01,L01,9,9,99,2.000000,1.000000,0,,Medium,-1.000000,Right\n\
             l02,L02,0,0,3,,,,,Missing,,\n"
        );
        let mut tsv = Vec::new();
        report.write_scatter_tsv(&mut tsv).unwrap();
        assert_eq!(
            String::from_utf8(tsv).unwrap(),
            "wals_code\tx\ty\tcluster\tjoshi\tlod_category\tdivergence_class\nl01\t2.000000\t1.000000\t0\t\tMedium\tRight\n"
        );
        let back: RunReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
    }
}
