use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, ClusterModel};

/// Joshi et al.'s six resource classes, from least to most resourced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum JoshiCategory {
    LeftBehinds,
    ScrappingBys,
    Hopefuls,
    RisingStars,
    Underdogs,
    Winner,
}

impl JoshiCategory {
    pub const ALL: [JoshiCategory; 6] = [
        JoshiCategory::LeftBehinds,
        JoshiCategory::ScrappingBys,
        JoshiCategory::Hopefuls,
        JoshiCategory::RisingStars,
        JoshiCategory::Underdogs,
        JoshiCategory::Winner,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            JoshiCategory::LeftBehinds => "Left-Behinds",
            JoshiCategory::ScrappingBys => "Scrapping-Bys",
            JoshiCategory::Hopefuls => "Hopefuls",
            JoshiCategory::RisingStars => "Rising Stars",
            JoshiCategory::Underdogs => "Underdogs",
            JoshiCategory::Winner => "Winner",
        }
    }
}

impl fmt::Display for JoshiCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ranks clusters by centroid coordinate sum (ties: smaller x first) and
/// gives rank r the Joshi class with index r.
pub fn label_clusters(model: &ClusterModel) -> Result<BTreeMap<usize, JoshiCategory>, AnalysisError> {
    if model.k != 6 || model.centroids.len() != 6 {
        return Err(AnalysisError::WrongK(model.k));
    }
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (model.centroids[a], model.centroids[b]);
        (ca[0] + ca[1])
            .total_cmp(&(cb[0] + cb[1]))
            .then(ca[0].total_cmp(&cb[0]))
            .then(a.cmp(&b))
    });
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(rank, cluster)| (cluster, JoshiCategory::ALL[rank]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(centroids: Vec<[f64; 2]>) -> ClusterModel {
        let k = centroids.len();
        ClusterModel {
            k,
            seed: 0,
            members: (0..k).map(|i| format!("l{i}")).collect(),
            assignments: (0..k).collect(),
            centroids,
            inertia: 0.0,
            iterations: 1,
            inertia_trace: vec![0.0],
        }
    }

    #[test]
    fn index_name_bijection() {
        for (i, c) in JoshiCategory::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(JoshiCategory::from_index(i), Some(*c));
        }
        assert_eq!(JoshiCategory::from_index(0).unwrap().name(), "Left-Behinds");
        assert_eq!(JoshiCategory::from_index(5).unwrap().name(), "Winner");
        assert_eq!(JoshiCategory::from_index(6), None);
    }

    #[test]
    fn labels_follow_centroid_sum() {
        // sums 1..6 stored out of order
        let m = model(vec![
            [2.0, 1.0],
            [0.5, 0.5],
            [3.0, 3.0],
            [1.0, 1.0],
            [2.5, 2.5],
            [2.0, 2.0],
        ]);
        let labels = label_clusters(&m).unwrap();
        let idx: Vec<usize> = (0..6).map(|c| labels[&c].index()).collect();
        assert_eq!(idx, vec![2, 0, 5, 1, 4, 3]);
    }

    #[test]
    fn labels_invariant_under_permutation() {
        let m = model(vec![
            [2.0, 1.0],
            [0.5, 0.5],
            [3.0, 3.0],
            [1.0, 1.0],
            [2.5, 2.5],
            [2.0, 2.0],
        ]);
        let base = label_clusters(&m).unwrap();
        let by_lang = |m: &ClusterModel, labels: &BTreeMap<usize, JoshiCategory>| {
            m.assignment_map()
                .into_iter()
                .map(|(l, c)| (l, labels[&c]))
                .collect::<BTreeMap<_, _>>()
        };
        let expected = by_lang(&m, &base);
        for perm in [[5, 4, 3, 2, 1, 0], [1, 2, 3, 4, 5, 0], [3, 0, 4, 1, 5, 2]] {
            let p = m.permuted(&perm);
            assert_eq!(by_lang(&p, &label_clusters(&p).unwrap()), expected);
        }
    }

    #[test]
    fn tie_broken_by_smaller_x() {
        let m = model(vec![
            [2.0, 1.0],
            [1.0, 2.0],
            [5.0, 5.0],
            [6.0, 6.0],
            [7.0, 7.0],
            [8.0, 8.0],
        ]);
        let labels = label_clusters(&m).unwrap();
        assert_eq!(labels[&1], JoshiCategory::LeftBehinds);
        assert_eq!(labels[&0], JoshiCategory::ScrappingBys);
    }

    #[test]
    fn wrong_k_rejected() {
        let m = model(vec![[0.0, 0.0]; 5]);
        assert_eq!(label_clusters(&m), Err(AnalysisError::WrongK(5)));
    }
}
