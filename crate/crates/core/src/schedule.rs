//! Per-layer merge schedules: what to merge at each encoder layer and how much.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which merge operations run inside one encoder layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeKind {
    None,
    Temporal,
    Spatial,
    TemporalThenSpatial,
}

impl MergeKind {
    pub fn temporal(self) -> bool {
        matches!(self, MergeKind::Temporal | MergeKind::TemporalThenSpatial)
    }
    pub fn spatial(self) -> bool {
        matches!(self, MergeKind::Spatial | MergeKind::TemporalThenSpatial)
    }
}

/// Segment-count rule for spatial merging.
///
/// `Hierarchical` uses one segment in the first half of the encoder and two
/// in the second half (coarse first, finer deeper).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentRule {
    Fixed(usize),
    Hierarchical,
}

impl SegmentRule {
    /// Resolve K for 1-based layer `layer` out of `total_layers`.
    pub fn segments(self, layer: usize, total_layers: usize) -> usize {
        match self {
            SegmentRule::Fixed(k) => k.max(1),
            // K = 1 for l <= L/2, else 2.
            SegmentRule::Hierarchical => {
                if 2 * layer <= total_layers {
                    1
                } else {
                    2
                }
            }
        }
    }
}

/// Plan for one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub kind: MergeKind,
    /// Temporal entries removed at this layer.
    #[serde(default)]
    pub r_t: usize,
    /// Spatial positions removed per frame at this layer.
    #[serde(default)]
    pub r_s: usize,
    /// Candidate multiplier: top m*r_s static positions become merge candidates.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Segment-count rule for spatial merging.
    #[serde(default = "default_k")]
    pub k: SegmentRule,
}

fn default_m() -> usize {
    2
}

fn default_k() -> SegmentRule {
    SegmentRule::Hierarchical
}

impl LayerPlan {
    pub fn none() -> Self {
        LayerPlan {
            kind: MergeKind::None,
            r_t: 0,
            r_s: 0,
            m: 2,
            k: SegmentRule::Hierarchical,
        }
    }
}

/// Full per-layer merge plan for an `L`-layer encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeSchedule {
    pub layers: Vec<LayerPlan>,
}

impl MergeSchedule {
    pub fn all_none(num_layers: usize) -> Self {
        MergeSchedule {
            layers: vec![LayerPlan::none(); num_layers],
        }
    }

    /// Temporal merging in layers `1..=split`, spatial in `split+1..=L`.
    pub fn temporal_then_spatial(
        num_layers: usize,
        split: usize,
        r_t: usize,
        r_s: usize,
        m: usize,
    ) -> Self {
        let layers = (1..=num_layers)
            .map(|l| {
                if l <= split {
                    LayerPlan {
                        kind: MergeKind::Temporal,
                        r_t,
                        r_s: 0,
                        m,
                        k: SegmentRule::Hierarchical,
                    }
                } else {
                    LayerPlan {
                        kind: MergeKind::Spatial,
                        r_t: 0,
                        r_s,
                        m,
                        k: SegmentRule::Hierarchical,
                    }
                }
            })
            .collect();
        MergeSchedule { layers }
    }

    /// Spatial merging in layers `1..=split`, temporal in `split+1..=L`.
    pub fn spatial_then_temporal(
        num_layers: usize,
        split: usize,
        r_t: usize,
        r_s: usize,
        m: usize,
    ) -> Self {
        let layers = (1..=num_layers)
            .map(|l| {
                if l <= split {
                    LayerPlan {
                        kind: MergeKind::Spatial,
                        r_t: 0,
                        r_s,
                        m,
                        k: SegmentRule::Hierarchical,
                    }
                } else {
                    LayerPlan {
                        kind: MergeKind::Temporal,
                        r_t,
                        r_s: 0,
                        m,
                        k: SegmentRule::Hierarchical,
                    }
                }
            })
            .collect();
        MergeSchedule { layers }
    }

    /// Temporal-then-spatial inside each of layers `1..=span`, nothing after.
    pub fn parallel(num_layers: usize, span: usize, r_t: usize, r_s: usize, m: usize) -> Self {
        let layers = (1..=num_layers)
            .map(|l| {
                if l <= span {
                    LayerPlan {
                        kind: MergeKind::TemporalThenSpatial,
                        r_t,
                        r_s,
                        m,
                        k: SegmentRule::Hierarchical,
                    }
                } else {
                    LayerPlan::none()
                }
            })
            .collect();
        MergeSchedule { layers }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Per-layer `(n_t, n_s)` after each layer, starting from `(n_t0, n_s0)`.
    pub fn token_counts(&self, n_t0: usize, n_s0: usize) -> Vec<(usize, usize)> {
        let mut n_t = n_t0;
        let mut n_s = n_s0;
        self.layers
            .iter()
            .map(|p| {
                if p.kind.temporal() {
                    n_t = n_t.saturating_sub(p.r_t);
                }
                if p.kind.spatial() {
                    n_s = n_s.saturating_sub(p.r_s);
                }
                (n_t, n_s)
            })
            .collect()
    }

    /// Validate against initial token counts: every layer must leave at least
    /// one token per axis and have a feasible candidate pool.
    pub fn validate(&self, n_t0: usize, n_s0: usize) -> Result<()> {
        let mut n_t = n_t0;
        let mut n_s = n_s0;
        for (i, p) in self.layers.iter().enumerate() {
            let layer = i + 1;
            match p.kind {
                MergeKind::None => {
                    if p.r_t != 0 || p.r_s != 0 {
                        return Err(Error::InvalidSchedule(format!(
                            "layer {layer}: kind none with nonzero removal"
                        )));
                    }
                }
                _ => {
                    if p.kind.temporal() {
                        if p.r_t == 0 {
                            return Err(Error::InvalidSchedule(format!(
                                "layer {layer}: temporal merge with R_T = 0"
                            )));
                        }
                        if p.r_t >= n_t {
                            return Err(Error::InvalidSchedule(format!(
                                "layer {layer}: R_T = {} leaves no temporal token (n_t = {n_t})",
                                p.r_t
                            )));
                        }
                        n_t -= p.r_t;
                    }
                    if p.kind.spatial() {
                        if p.r_s == 0 {
                            return Err(Error::InvalidSchedule(format!(
                                "layer {layer}: spatial merge with R_S = 0"
                            )));
                        }
                        if p.m < 1 {
                            return Err(Error::InvalidSchedule(format!("layer {layer}: m < 1")));
                        }
                        if p.r_s >= n_s {
                            return Err(Error::InvalidSchedule(format!(
                                "layer {layer}: R_S = {} leaves no spatial token (n_s = {n_s})",
                                p.r_s
                            )));
                        }
                        if p.m * p.r_s > n_s {
                            return Err(Error::InvalidSchedule(format!(
                                "layer {layer}: m*R_S = {} exceeds n_s = {n_s}",
                                p.m * p.r_s
                            )));
                        }
                        n_s -= p.r_s;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hierarchical_k_boundary() {
        // l = L/2 exactly stays coarse.
        assert_eq!(SegmentRule::Hierarchical.segments(6, 12), 1);
        assert_eq!(SegmentRule::Hierarchical.segments(7, 12), 2);
        assert_eq!(SegmentRule::Hierarchical.segments(1, 12), 1);
        assert_eq!(SegmentRule::Hierarchical.segments(12, 12), 2);
    }

    #[test]
    fn token_counts_sequential_default() {
        let s = MergeSchedule::temporal_then_spatial(12, 6, 1, 12, 2);
        s.validate(16, 196).unwrap();
        let counts = s.token_counts(16, 196);
        assert_eq!(counts[5], (10, 196));
        assert_eq!(counts[11], (10, 124));
    }

    #[test]
    fn rejects_overdraining() {
        let s = MergeSchedule::temporal_then_spatial(12, 6, 3, 12, 2);
        assert!(s.validate(16, 196).is_err()); // 6*3 = 18 >= 16
    }

    #[test]
    fn rejects_candidate_overflow() {
        let s = MergeSchedule::temporal_then_spatial(4, 2, 1, 3, 4);
        // n_s = 8: m*R_S = 12 > 8
        assert!(s.validate(8, 8).is_err());
    }

    #[test]
    fn all_none_is_valid() {
        MergeSchedule::all_none(12).validate(2, 2).unwrap();
    }
}
