//! Lloyd's k-means on 2-D feature points with k-means++ seeding.
//!
//! Seeding draws from a ChaCha8 stream seeded with `KMeansParams::seed`, so
//! identical inputs and parameters always produce the identical model.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, FeaturePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    /// Independent seedings; the lowest-inertia model is kept.
    pub restarts: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            k: 6,
            seed: 42,
            max_iter: 300,
            tol: 1e-6,
            restarts: 1,
        }
    }
}

impl KMeansParams {
    fn validate(&self) -> Result<(), AnalysisError> {
        if self.k == 0 {
            return Err(AnalysisError::InvalidParams("k must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(AnalysisError::InvalidParams("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(AnalysisError::InvalidParams(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.restarts == 0 {
            return Err(AnalysisError::InvalidParams("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub seed: u64,
    pub centroids: Vec<[f64; 2]>,
    /// Cluster index per input point, in input order.
    pub assignments: Vec<usize>,
    /// Wals code per input point, in input order.
    pub members: Vec<String>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every assignment step of the kept run.
    pub inertia_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn assignment_map(&self) -> BTreeMap<String, usize> {
        self.members
            .iter()
            .cloned()
            .zip(self.assignments.iter().copied())
            .collect()
    }

    /// Same model with cluster indices permuted: new index of old cluster
    /// `i` is `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> ClusterModel {
        assert_eq!(perm.len(), self.k);
        let mut centroids = vec![[0.0; 2]; self.k];
        for (old, &new) in perm.iter().enumerate() {
            centroids[new] = self.centroids[old];
        }
        ClusterModel {
            centroids,
            assignments: self.assignments.iter().map(|&a| perm[a]).collect(),
            ..self.clone()
        }
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Nearest centroid per point (lowest index on ties) and the squared
/// distance to it.
pub fn assign_nearest(points: &[[f64; 2]], centroids: &[[f64; 2]]) -> (Vec<usize>, Vec<f64>) {
    points
        .iter()
        .map(|&p| {
            let mut best = (0, f64::INFINITY);
            for (j, &c) in centroids.iter().enumerate() {
                let d = dist2(p, c);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .unzip()
}

fn seed_plus_plus(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in d2.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                acc += d;
                chosen = Some(i);
                if acc > target {
                    break;
                }
            }
            chosen.expect("positive total implies a positive weight")
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick];
        centroids.push(c);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, c));
        }
    }
    centroids
}

struct Run {
    centroids: Vec<[f64; 2]>,
    assignments: Vec<usize>,
    inertia: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn lloyd(points: &[[f64; 2]], mut centroids: Vec<[f64; 2]>, params: &KMeansParams) -> Run {
    let k = centroids.len();
    let mut trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..params.max_iter {
        iterations += 1;
        let (assignments, d2) = assign_nearest(points, &centroids);
        trace.push(d2.iter().sum());

        let mut sums = vec![[0.0f64; 2]; k];
        let mut sizes = vec![0usize; k];
        for (&p, &a) in points.iter().zip(&assignments) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            sizes[a] += 1;
        }
        let mut next = centroids.clone();
        let mut taken = vec![false; points.len()];
        for j in 0..k {
            if sizes[j] > 0 {
                let n = sizes[j] as f64;
                next[j] = [sums[j][0] / n, sums[j][1] / n];
            } else {
                // re-seed on the point farthest from its centroid
                let far = d2
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !taken[*i])
                    .fold(None::<(usize, f64)>, |best, (i, &d)| match best {
                        Some((_, bd)) if bd >= d => best,
                        _ => Some((i, d)),
                    });
                if let Some((i, _)) = far {
                    taken[i] = true;
                    next[j] = points[i];
                }
            }
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(&a, &b)| dist2(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < params.tol {
            break;
        }
    }
    let (assignments, d2) = assign_nearest(points, &centroids);
    let inertia: f64 = d2.iter().sum();
    trace.push(inertia);
    Run {
        centroids,
        assignments,
        inertia,
        iterations,
        trace,
    }
}

/// Clusters `points` into `params.k` groups.
pub fn kmeans(points: &[FeaturePoint], params: &KMeansParams) -> Result<ClusterModel, AnalysisError> {
    params.validate()?;
    if points.len() < params.k {
        return Err(AnalysisError::TooFewPoints {
            k: params.k,
            n: points.len(),
        });
    }
    let coords: Vec<[f64; 2]> = points.iter().map(FeaturePoint::coords).collect();
    if coords.iter().flatten().any(|v| !v.is_finite()) {
        return Err(AnalysisError::InvalidParams("non-finite feature value".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<Run> = None;
    for _ in 0..params.restarts {
        let init = seed_plus_plus(&coords, params.k, &mut rng);
        let run = lloyd(&coords, init, params);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("restarts >= 1");
    Ok(ClusterModel {
        k: params.k,
        seed: params.seed,
        centroids: best.centroids,
        assignments: best.assignments,
        members: points.iter().map(|p| p.wals_code.clone()).collect(),
        inertia: best.inertia,
        iterations: best.iterations,
        inertia_trace: best.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[(f64, f64)]) -> Vec<FeaturePoint> {
        coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| FeaturePoint {
                wals_code: format!("p{i}"),
                x,
                y,
            })
            .collect()
    }

    #[test]
    fn two_blobs_any_seed() {
        let points = pts(&[(0.0, 0.0), (0.1, 0.0), (10.0, 10.0), (10.0, 10.1)]);
        for seed in 0..20 {
            let params = KMeansParams {
                k: 2,
                seed,
                ..KMeansParams::default()
            };
            let m = kmeans(&points, &params).unwrap();
            assert_eq!(m.assignments[0], m.assignments[1], "seed {seed}");
            assert_eq!(m.assignments[2], m.assignments[3], "seed {seed}");
            assert_ne!(m.assignments[0], m.assignments[2], "seed {seed}");
        }
    }

    #[test]
    fn k1_is_the_mean() {
        let points = pts(&[(1.0, 2.0), (3.0, 4.0), (5.0, 0.0), (-1.0, 2.0)]);
        let m = kmeans(
            &points,
            &KMeansParams {
                k: 1,
                ..KMeansParams::default()
            },
        )
        .unwrap();
        assert!((m.centroids[0][0] - 2.0).abs() < 1e-12);
        assert!((m.centroids[0][1] - 2.0).abs() < 1e-12);
        assert!(m.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn too_few_points_and_bad_params() {
        let points = pts(&[(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(
            kmeans(&points, &KMeansParams::default()),
            Err(AnalysisError::TooFewPoints { k: 6, n: 2 })
        );
        for bad in [
            KMeansParams { k: 0, ..KMeansParams::default() },
            KMeansParams { k: 1, tol: 0.0, ..KMeansParams::default() },
            KMeansParams { k: 1, max_iter: 0, ..KMeansParams::default() },
            KMeansParams { k: 1, restarts: 0, ..KMeansParams::default() },
        ] {
            assert!(matches!(kmeans(&points, &bad), Err(AnalysisError::InvalidParams(_))));
        }
    }

    #[test]
    fn duplicate_points_fill_all_clusters() {
        let points = pts(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0), (2.0, 2.0)]);
        let m = kmeans(
            &points,
            &KMeansParams {
                k: 3,
                ..KMeansParams::default()
            },
        )
        .unwrap();
        assert!(m.assignments.iter().all(|&a| a < 3));
        assert!(m.inertia.abs() < 1e-12);
    }

    #[test]
    fn final_assignment_is_fixed_point_and_trace_monotone() {
        let coords: Vec<(f64, f64)> = (0..50)
            .map(|i| {
                let t = i as f64;
                ((t * 0.37).sin() * 3.0 + t * 0.05, (t * 1.3).cos() * 2.0)
            })
            .collect();
        let points = pts(&coords);
        let m = kmeans(
            &points,
            &KMeansParams {
                k: 4,
                seed: 3,
                restarts: 3,
                ..KMeansParams::default()
            },
        )
        .unwrap();
        let raw: Vec<[f64; 2]> = points.iter().map(FeaturePoint::coords).collect();
        let (again, d2) = assign_nearest(&raw, &m.centroids);
        assert_eq!(again, m.assignments);
        assert!((d2.iter().sum::<f64>() - m.inertia).abs() < 1e-12);
        for w in m.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", m.inertia_trace);
        }
    }

    #[test]
    fn permutation_relabels_consistently() {
        let points = pts(&[(0.0, 0.0), (0.1, 0.0), (10.0, 10.0), (10.0, 10.1), (5.0, 0.0)]);
        let m = kmeans(
            &points,
            &KMeansParams {
                k: 3,
                ..KMeansParams::default()
            },
        )
        .unwrap();
        let p = m.permuted(&[2, 0, 1]);
        for (a, b) in m.assignments.iter().zip(&p.assignments) {
            assert_eq!(m.centroids[*a], p.centroids[*b]);
        }
    }
}
