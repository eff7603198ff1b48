use serde::{Deserialize, Serialize};

use super::AnalysisError;

pub const QUANTILE_METHOD: &str = "linear interpolation on sorted sample, h = p(n-1)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub q3: f64,
}

fn interpolate(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(&next) => sorted[lo] + frac * (next - sorted[lo]),
        None => sorted[lo],
    }
}

/// Empirical `p`-quantile by linear interpolation between order statistics.
pub fn quantile(values: &[u64], p: f64) -> Result<f64, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut sorted: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    sorted.sort_by(f64::total_cmp);
    Ok(interpolate(&sorted, p.clamp(0.0, 1.0)))
}

pub fn quartiles(values: &[u64]) -> Result<Quartiles, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut sorted: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    sorted.sort_by(f64::total_cmp);
    Ok(Quartiles {
        q1: interpolate(&sorted, 0.25),
        q3: interpolate(&sorted, 0.75),
    })
}
