use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, FeaturePoint, Quartiles};

/// Quartile-based LOD resource category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LodCategory {
    Missing,
    Low,
    Medium,
    High,
    Unclassified,
}

impl LodCategory {
    pub const ALL: [LodCategory; 5] = [
        LodCategory::Missing,
        LodCategory::Low,
        LodCategory::Medium,
        LodCategory::High,
        LodCategory::Unclassified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LodCategory::Missing => "Missing",
            LodCategory::Low => "Low",
            LodCategory::Medium => "Medium",
            LodCategory::High => "High",
            LodCategory::Unclassified => "Unclassified",
        }
    }
}

impl fmt::Display for LodCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Categorizes one language from its entity count `e` and article count
/// `w`. Low and High use strict bounds, Medium the closed interquartile
/// range on both axes; anything else in L* is Unclassified.
pub fn lod_categorize(e: u64, w: u64, q_e: &Quartiles, q_w: &Quartiles, in_l_star: bool) -> LodCategory {
    if !in_l_star {
        return LodCategory::Missing;
    }
    let (e, w) = (e as f64, w as f64);
    if e < q_e.q1 && w < q_w.q1 {
        LodCategory::Low
    } else if (q_e.q1..=q_e.q3).contains(&e) && (q_w.q1..=q_w.q3).contains(&w) {
        LodCategory::Medium
    } else if e > q_e.q3 && w > q_w.q3 {
        LodCategory::High
    } else {
        LodCategory::Unclassified
    }
}

/// Half an order of magnitude on log10 axes.
pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DivergenceClass {
    /// More entities than articles.
    Left,
    /// More articles than entities.
    Right,
    NearLinear,
}

impl DivergenceClass {
    pub fn name(self) -> &'static str {
        match self {
            DivergenceClass::Left => "Left",
            DivergenceClass::Right => "Right",
            DivergenceClass::NearLinear => "NearLinear",
        }
    }
}

impl fmt::Display for DivergenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    /// y - x
    pub score: f64,
    pub class: DivergenceClass,
    pub tau: f64,
}

pub fn divergence(point: &FeaturePoint, tau: f64) -> Result<Divergence, AnalysisError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(AnalysisError::InvalidTau(tau));
    }
    let score = point.y - point.x;
    let class = if score > tau {
        DivergenceClass::Left
    } else if score < -tau {
        DivergenceClass::Right
    } else {
        DivergenceClass::NearLinear
    };
    Ok(Divergence { score, class, tau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::FeatureTransform;

    const Q: Quartiles = Quartiles { q1: 2.75, q3: 6.25 };

    #[test]
    fn definition_fixture() {
        assert_eq!(lod_categorize(2, 2, &Q, &Q, true), LodCategory::Low);
        assert_eq!(lod_categorize(4, 4, &Q, &Q, true), LodCategory::Medium);
        assert_eq!(lod_categorize(7, 7, &Q, &Q, true), LodCategory::High);
        assert_eq!(lod_categorize(2, 7, &Q, &Q, true), LodCategory::Unclassified);
        assert_eq!(lod_categorize(7, 4, &Q, &Q, true), LodCategory::Unclassified);
    }

    #[test]
    fn outside_l_star_is_missing() {
        for (e, w) in [(0, 0), (2, 2), (100, 100)] {
            assert_eq!(lod_categorize(e, w, &Q, &Q, false), LodCategory::Missing);
        }
    }

    #[test]
    fn bounds_are_inclusive_for_medium() {
        let q = Quartiles { q1: 3.0, q3: 6.0 };
        assert_eq!(lod_categorize(3, 3, &q, &q, true), LodCategory::Medium);
        assert_eq!(lod_categorize(6, 6, &q, &q, true), LodCategory::Medium);
        assert_eq!(lod_categorize(3, 6, &q, &q, true), LodCategory::Medium);
    }

    fn point(e: u64, w: u64) -> FeaturePoint {
        let t = FeatureTransform::Log10;
        FeaturePoint {
            wals_code: "x".into(),
            x: t.apply(w),
            y: t.apply(e),
        }
    }

    #[test]
    fn divergence_examples() {
        let d = divergence(&point(500, 500), DEFAULT_TAU).unwrap();
        assert_eq!((d.score, d.class), (0.0, DivergenceClass::NearLinear));
        let d = divergence(&point(999_999, 999), DEFAULT_TAU).unwrap();
        assert!((d.score - 3.0).abs() < 1e-12);
        assert_eq!(d.class, DivergenceClass::Left);
        let d = divergence(&point(99, 99_999), DEFAULT_TAU).unwrap();
        assert!((d.score + 3.0).abs() < 1e-12);
        assert_eq!(d.class, DivergenceClass::Right);
    }

    #[test]
    fn divergence_threshold_edges() {
        let at = |score: f64| FeaturePoint {
            wals_code: "x".into(),
            x: 1.0,
            y: 1.0 + score,
        };
        assert_eq!(divergence(&at(0.5), 0.5).unwrap().class, DivergenceClass::NearLinear);
        assert_eq!(divergence(&at(0.75), 0.5).unwrap().class, DivergenceClass::Left);
        assert_eq!(divergence(&at(-0.75), 0.5).unwrap().class, DivergenceClass::Right);
        assert!(divergence(&at(0.0), 0.0).is_err());
        assert!(divergence(&at(0.0), f64::NAN).is_err());
    }
}
