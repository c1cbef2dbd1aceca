//! Analytic cost accounting for divided space-time layers under a merge
//! schedule.
//!
//! Counts are multiply-accumulate operations over the four projection
//! matrices, the attention score/apply products, and the MLP. The temporal
//! stage is counted twice per layer, matching the reference encoder's
//! two-granularity temporal attention. Patch embedding and the readout head
//! are constant across schedules and excluded; they cancel in ratios.

use serde::Serialize;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::schedule::MergeSchedule;

/// Per-component operation counts for one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComponentFlops {
    pub temporal_attention: u64,
    pub spatial_attention: u64,
    pub projection: u64,
    pub mlp: u64,
}

impl ComponentFlops {
    pub fn total(&self) -> u64 {
        self.temporal_attention + self.spatial_attention + self.projection + self.mlp
    }
}

/// One layer's dims and cost breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct LayerCost {
    pub n_t: usize,
    pub n_s: usize,
    pub temporal_attention: u64,
    pub spatial_attention: u64,
    pub projection: u64,
    pub mlp: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CostReport {
    pub layers: Vec<LayerCost>,
    pub total_flops: u64,
    pub baseline_flops: u64,
    pub ratio: f64,
}

fn temporal_stage(n_t: u64, n_s: u64, c: u64) -> (u64, u64) {
    // Two temporal granularities per layer: projections and attention both
    // counted twice.
    let proj = 2 * 4 * n_t * n_s * c * c;
    let attn = 2 * 2 * n_s * n_t * n_t * c;
    (proj, attn)
}

fn spatial_stage(n_t: u64, n_s: u64, cls: u64, c: u64) -> (u64, u64) {
    let row = n_s + cls;
    let proj = 4 * n_t * row * c * c;
    let attn = 2 * n_t * row * row * c;
    (proj, attn)
}

fn mlp_stage(n_t: u64, n_s: u64, cls: u64, c: u64) -> u64 {
    8 * (n_t * n_s + cls) * c * c
}

/// Cost of one layer at fixed dims (no within-layer merging).
pub fn layer_flops(n_t: usize, n_s: usize, c: usize, with_cls: bool) -> ComponentFlops {
    layer_flops_staged(n_t, n_s, n_t, n_s, c, with_cls)
}

/// Cost of one layer whose dims shrink mid-layer.
///
/// The temporal stage runs at the incoming dims, the spatial stage sees the
/// post-temporal-merge frame count but the pre-spatial-merge position count,
/// and the MLP runs at the fully merged dims.
pub fn layer_flops_staged(
    n_t_in: usize,
    n_s_in: usize,
    n_t_out: usize,
    n_s_out: usize,
    c: usize,
    with_cls: bool,
) -> ComponentFlops {
    let cls = u64::from(with_cls);
    let c = c as u64;
    let (t_proj, t_attn) = temporal_stage(n_t_in as u64, n_s_in as u64, c);
    let (s_proj, s_attn) = spatial_stage(n_t_out as u64, n_s_in as u64, cls, c);
    let mlp = mlp_stage(n_t_out as u64, n_s_out as u64, cls, c);
    ComponentFlops {
        temporal_attention: t_attn,
        spatial_attention: s_attn,
        projection: t_proj + s_proj,
        mlp,
    }
}

/// Accumulate layer costs over the schedule's token arithmetic and report the
/// ratio against the merge-free baseline at the same dims and depth.
pub fn schedule_cost(config: &ModelConfig, schedule: &MergeSchedule) -> Result<CostReport> {
    config.validate()?;
    let n_t0 = config.temporal_tokens();
    let n_s0 = config.spatial_tokens();
    if schedule.layers.len() != config.layers {
        return Err(Error::InvalidSchedule(format!(
            "schedule covers {} layers, model has {}",
            schedule.layers.len(),
            config.layers
        )));
    }
    schedule.validate(n_t0, n_s0)?;
    let counts = schedule.token_counts(n_t0, n_s0);

    let mut layers = Vec::with_capacity(config.layers);
    let mut total: u64 = 0;
    let (mut n_t, mut n_s) = (n_t0, n_s0);
    for (n_t_out, n_s_out) in counts {
        let flops = layer_flops_staged(
            n_t,
            n_s,
            n_t_out,
            n_s_out,
            config.channels,
            config.cls_enabled,
        );
        total += flops.total();
        layers.push(LayerCost {
            n_t: n_t_out,
            n_s: n_s_out,
            temporal_attention: flops.temporal_attention,
            spatial_attention: flops.spatial_attention,
            projection: flops.projection,
            mlp: flops.mlp,
        });
        n_t = n_t_out;
        n_s = n_s_out;
    }

    let baseline =
        layer_flops(n_t0, n_s0, config.channels, config.cls_enabled).total() * config.layers as u64;
    Ok(CostReport {
        layers,
        total_flops: total,
        baseline_flops: baseline,
        ratio: total as f64 / baseline as f64,
    })
}
