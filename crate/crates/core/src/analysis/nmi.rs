use std::collections::BTreeMap;

use super::AnalysisError;

pub const NMI_NORMALIZATION: &str = "arithmetic mean of entropies, natural log";

/// Shannon entropy (nats) of a label distribution given by its counts.
pub fn entropy(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

fn index_labels<L: Ord + Clone>(labels: impl Iterator<Item = L>) -> (Vec<usize>, usize) {
    let mut ids: BTreeMap<L, usize> = BTreeMap::new();
    let out = labels
        .map(|l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect();
    (out, ids.len())
}

/// Normalized mutual information between two labelings of the same items:
/// I(A;B) / ((H(A) + H(B)) / 2).
///
/// Identical partitions (up to relabeling) score 1; otherwise, if either
/// partition has zero entropy, the score is 0.
pub fn nmi<K, LA, LB>(a: &BTreeMap<K, LA>, b: &BTreeMap<K, LB>) -> Result<f64, AnalysisError>
where
    K: Ord,
    LA: Ord + Clone,
    LB: Ord + Clone,
{
    if a.is_empty() && b.is_empty() {
        return Err(AnalysisError::Empty);
    }
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        return Err(AnalysisError::KeyMismatch);
    }
    let (ia, ka) = index_labels(a.values().cloned());
    let (ib, kb) = index_labels(b.values().cloned());

    let mut cells: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&x, &y) in ia.iter().zip(&ib) {
        *cells.entry((x, y)).or_insert(0) += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    if cells.len() == ka && cells.len() == kb {
        return Ok(1.0);
    }
    let h_a = entropy(&rows);
    let h_b = entropy(&cols);
    if h_a == 0.0 || h_b == 0.0 {
        return Ok(0.0);
    }
    let n = ia.len() as f64;
    let mi: f64 = cells
        .iter()
        .map(|(&(x, y), &c)| {
            let c = c as f64;
            (c / n) * (n * c / (rows[x] as f64 * cols[y] as f64)).ln()
        })
        .sum();
    Ok((mi / (0.5 * (h_a + h_b))).clamp(0.0, 1.0))
}
