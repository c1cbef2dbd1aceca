//! Runtime knobs for the merge hooks.

use serde::{Deserialize, Serialize};

/// How merge pairs are chosen.
///
/// `Random` keeps the token budget of the schedule but picks pairs uniformly
/// at random (seeded); it exists as a control for information-retention
/// comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergePolicy {
    InformationMining,
    Random { seed: u64 },
}

impl Default for MergePolicy {
    fn default() -> Self {
        MergePolicy::InformationMining
    }
}

/// Behavior flags for the merging pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct MergeOptions {
    /// Use the saliency weights literally (no renormalization by their sum)
    /// when fusing a temporal pair. Default renormalizes so merged tokens
    /// stay inside the convex hull of their group.
    pub raw_fusion_weights: bool,
    /// Match spatial merge pairs per frame instead of once per segment from
    /// segment-mean keys.
    pub per_frame_matching: bool,
    /// Add `ln(size)` to attention logits of merged tokens.
    pub proportional_attention: bool,
    /// Pair-selection policy for both merge hooks.
    pub policy: MergePolicy,
}
