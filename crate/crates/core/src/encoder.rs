//! A small deterministic divided space-time transformer encoder.
//!
//! Each layer runs temporal attention (per spatial position, across the
//! track), then spatial attention (per frame), then an MLP, with pre-norm
//! residual blocks throughout. The merge hooks fire after their matching
//! attention stage: temporal merging after temporal attention, spatial
//! merging after spatial attention. Per-layer head-averaged keys and
//! attention probabilities are exposed for the merging decisions.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::grid::{ProvenanceMap, TokenGrid};
use crate::merge::{spatial, temporal};
use crate::options::MergeOptions;
use crate::schedule::MergeSchedule;
use crate::tensorfile::Tensor;
use crate::video::Video;

/// Per-layer learned parameters, seeded uniform in `(-1/sqrt(C), 1/sqrt(C))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    /// Row-major `[C][C]` projections.
    pub wq: Vec<f64>,
    pub wk: Vec<f64>,
    pub wv: Vec<f64>,
    pub wo: Vec<f64>,
    /// MLP: `[C][4C]` then `[4C][C]`.
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub ln_temporal: LayerNorm,
    pub ln_spatial: LayerNorm,
    pub ln_mlp: LayerNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
}

impl LayerNorm {
    fn unit(c: usize) -> Self {
        LayerNorm {
            scale: vec![1.0; c],
            shift: vec![0.0; c],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / (var + 1e-6).sqrt();
        x.iter()
            .zip(self.scale.iter().zip(&self.shift))
            .map(|(&v, (&g, &b))| (v - mean) * inv * g + b)
            .collect()
    }
}

/// Keys and attention probabilities captured at one layer.
///
/// Temporal entries are captured before any temporal merge of the same layer;
/// spatial keys are captured before the spatial merge. Shapes therefore track
/// the grid as it entered each attention stage.
#[derive(Debug, Clone)]
pub struct AttentionArtifacts {
    /// `[n_s][n_t][C/heads]`, head-averaged.
    pub temporal_keys: Vec<Vec<Vec<f64>>>,
    /// `[n_s][n_t][n_t]`, head-averaged row-stochastic attention.
    pub temporal_attention: Vec<Vec<Vec<f64>>>,
    /// `[n_t][n_s][C/heads]`, head-averaged, CLS excluded.
    pub spatial_keys: Vec<Vec<Vec<f64>>>,
}

/// Result of a full forward pass.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub grid: TokenGrid,
    pub provenance: ProvenanceMap,
    pub artifacts: Vec<AttentionArtifacts>,
    /// Provenance snapshot after each layer, for merge-map export.
    pub layer_provenance: Vec<ProvenanceMap>,
}

/// Deterministic encoder instance; immutable after construction.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub config: ModelConfig,
    /// `[tubelet*P*P*3][C]` patch embedding.
    patch_proj: Vec<f64>,
    cls_init: Vec<f64>,
    pub layers: Vec<LayerWeights>,
}

fn fill(rng: &mut ChaCha20Rng, dist: &Uniform<f64>, len: usize) -> Vec<f64> {
    (0..len).map(|_| dist.sample(rng)).collect()
}

pub fn build_encoder(config: &ModelConfig, seed: u64) -> Result<Encoder> {
    config.validate()?;
    let c = config.channels;
    let scale = 1.0 / (c as f64).sqrt();
    let dist = Uniform::new(-scale, scale);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let patch_dim = config.tubelet * config.patch * config.patch * 3;
    let patch_proj = fill(&mut rng, &dist, patch_dim * c);
    let cls_init = fill(&mut rng, &dist, c);
    let layers = (0..config.layers)
        .map(|_| LayerWeights {
            wq: fill(&mut rng, &dist, c * c),
            wk: fill(&mut rng, &dist, c * c),
            wv: fill(&mut rng, &dist, c * c),
            wo: fill(&mut rng, &dist, c * c),
            w1: fill(&mut rng, &dist, c * 4 * c),
            w2: fill(&mut rng, &dist, 4 * c * c),
            ln_temporal: LayerNorm::unit(c),
            ln_spatial: LayerNorm::unit(c),
            ln_mlp: LayerNorm::unit(c),
        })
        .collect();
    Ok(Encoder {
        config: config.clone(),
        patch_proj,
        cls_init,
        layers,
    })
}

fn matvec(w: &[f64], in_dim: usize, out_dim: usize, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), in_dim);
    debug_assert_eq!(w.len(), in_dim * out_dim);
    let mut y = vec![0.0; out_dim];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &w[i * out_dim..(i + 1) * out_dim];
        for (yj, &wij) in y.iter_mut().zip(row) {
            *yj += xi * wij;
        }
    }
    y
}

fn gelu(x: f64) -> f64 {
    const SQRT_2_OVER_PI: f64 = 0.7978845608028654;
    0.5 * x * (1.0 + (SQRT_2_OVER_PI * (x + 0.044715 * x * x * x)).tanh())
}

/// Sinusoidal code over the spatial position only, so identical patch content
/// at the same position yields identical tokens across frames.
fn position_code(pos: usize, c: usize) -> Vec<f64> {
    let mut code = vec![0.0; c];
    for i in 0..c / 2 {
        let freq = 1.0 / 10000f64.powf(2.0 * i as f64 / c as f64);
        code[2 * i] = (pos as f64 * freq).sin();
        code[2 * i + 1] = (pos as f64 * freq).cos();
    }
    if c % 2 == 1 {
        let freq = 1.0 / 10000f64.powf((c - 1) as f64 / c as f64);
        code[c - 1] = (pos as f64 * freq).sin();
    }
    code
}

struct AttnOut {
    /// Residual deltas per sequence token.
    deltas: Vec<Vec<f64>>,
    /// Head-averaged keys per token, `[n][C/heads]`.
    mean_keys: Vec<Vec<f64>>,
    /// Head-averaged attention rows, `[n][n]`.
    mean_probs: Vec<Vec<f64>>,
}

impl Encoder {
    /// Tokenize a raw clip: each tubelet patch is flattened, linearly
    /// projected, and offset by a fixed sinusoidal spatial position code.
    pub fn tokenize(&self, video: &Video) -> Result<TokenGrid> {
        let cfg = &self.config;
        if video.frames != cfg.frames || video.height != cfg.height || video.width != cfg.width {
            return Err(Error::DimensionMismatch(format!(
                "video {}x{}x{} does not match config {}x{}x{}",
                video.frames, video.height, video.width, cfg.frames, cfg.height, cfg.width
            )));
        }
        let n_t = cfg.temporal_tokens();
        let n_s = cfg.spatial_tokens();
        let c = cfg.channels;
        let p = cfg.patch;
        let gw = cfg.grid_width();
        let patch_dim = cfg.tubelet * p * p * 3;
        let mut grid = TokenGrid::zeros(n_t, n_s, c, cfg.cls_enabled);
        let mut flat = vec![0.0; patch_dim];
        for tau in 0..n_t {
            for sigma in 0..n_s {
                let gy = sigma / gw;
                let gx = sigma % gw;
                let mut idx = 0;
                for dt in 0..cfg.tubelet {
                    let t = tau * cfg.tubelet + dt;
                    for py in 0..p {
                        for px in 0..p {
                            for ch in 0..3 {
                                flat[idx] = video.get(t, gy * p + py, gx * p + px, ch);
                                idx += 1;
                            }
                        }
                    }
                }
                let mut tok = matvec(&self.patch_proj, patch_dim, c, &flat);
                let code = position_code(sigma, c);
                for (v, pc) in tok.iter_mut().zip(&code) {
                    *v += pc;
                }
                grid.set_token(tau, sigma, &tok);
            }
        }
        if cfg.cls_enabled {
            grid.cls = Some(self.cls_init.clone());
        }
        Ok(grid)
    }

    fn attend(
        &self,
        lw: &LayerWeights,
        ln: &LayerNorm,
        seq: &[&[f64]],
        sizes: Option<&[usize]>,
    ) -> AttnOut {
        let c = self.config.channels;
        let heads = self.config.heads;
        let hd = self.config.head_dim();
        let n = seq.len();
        let normed: Vec<Vec<f64>> = seq.iter().map(|t| ln.apply(t)).collect();
        let q: Vec<Vec<f64>> = normed.iter().map(|t| matvec(&lw.wq, c, c, t)).collect();
        let k: Vec<Vec<f64>> = normed.iter().map(|t| matvec(&lw.wk, c, c, t)).collect();
        let v: Vec<Vec<f64>> = normed.iter().map(|t| matvec(&lw.wv, c, c, t)).collect();

        let inv_sqrt = 1.0 / (hd as f64).sqrt();
        let mut ctx = vec![vec![0.0; c]; n];
        let mut mean_probs = vec![vec![0.0; n]; n];
        for h in 0..heads {
            let lo = h * hd;
            let hi = lo + hd;
            for i in 0..n {
                let mut logits = vec![0.0; n];
                for j in 0..n {
                    let mut dot = 0.0;
                    for d in lo..hi {
                        dot += q[i][d] * k[j][d];
                    }
                    logits[j] = dot * inv_sqrt;
                    if let Some(sz) = sizes {
                        logits[j] += (sz[j] as f64).ln();
                    }
                }
                let probs = crate::kernels::softmax_row(&logits).expect("non-empty row");
                for j in 0..n {
                    mean_probs[i][j] += probs[j] / heads as f64;
                    for d in lo..hi {
                        ctx[i][d] += probs[j] * v[j][d];
                    }
                }
            }
        }
        let deltas: Vec<Vec<f64>> = ctx.iter().map(|t| matvec(&lw.wo, c, c, t)).collect();
        let mean_keys: Vec<Vec<f64>> = k
            .iter()
            .map(|kv| {
                (0..hd)
                    .map(|d| (0..heads).map(|h| kv[h * hd + d]).sum::<f64>() / heads as f64)
                    .collect()
            })
            .collect();
        AttnOut {
            deltas,
            mean_keys,
            mean_probs,
        }
    }

    fn mlp_token(&self, lw: &LayerWeights, x: &mut [f64]) {
        let c = self.config.channels;
        let normed = lw.ln_mlp.apply(x);
        let mut hidden = matvec(&lw.w1, c, 4 * c, &normed);
        for h in hidden.iter_mut() {
            *h = gelu(*h);
        }
        let out = matvec(&lw.w2, 4 * c, c, &hidden);
        for (xi, oi) in x.iter_mut().zip(&out) {
            *xi += oi;
        }
    }

    /// Run the encoder over a token grid, applying the schedule's merge hooks.
    pub fn forward(
        &self,
        grid: &TokenGrid,
        schedule: &MergeSchedule,
        opts: &MergeOptions,
    ) -> Result<ForwardOutput> {
        let cfg = &self.config;
        if schedule.num_layers() != cfg.layers {
            return Err(Error::InvalidSchedule(format!(
                "schedule has {} layers, encoder has {}",
                schedule.num_layers(),
                cfg.layers
            )));
        }
        schedule.validate(grid.n_t, grid.n_s)?;
        let expected = schedule.token_counts(grid.n_t, grid.n_s);

        let mut grid = grid.clone();
        let mut provenance = ProvenanceMap::identity(grid.n_t, grid.n_s);
        let mut artifacts = Vec::with_capacity(cfg.layers);
        let mut layer_provenance = Vec::with_capacity(cfg.layers);

        for (li, plan) in schedule.layers.iter().enumerate() {
            let lw = &self.layers[li];
            let layer = li + 1;

            // Temporal attention: one sequence per spatial position.
            let tracks: Vec<AttnOut> = (0..grid.n_s)
                .into_par_iter()
                .map(|s| {
                    let seq: Vec<&[f64]> = (0..grid.n_t).map(|t| grid.token(t, s)).collect();
                    let sizes: Option<Vec<usize>> = opts
                        .proportional_attention
                        .then(|| (0..grid.n_t).map(|t| provenance.size(t, s)).collect());
                    self.attend(lw, &lw.ln_temporal, &seq, sizes.as_deref())
                })
                .collect();
            let mut temporal_keys = Vec::with_capacity(grid.n_s);
            let mut temporal_attention = Vec::with_capacity(grid.n_s);
            for (s, out) in tracks.into_iter().enumerate() {
                for (t, delta) in out.deltas.iter().enumerate() {
                    let tok = grid.token_mut(t, s);
                    for (xi, di) in tok.iter_mut().zip(delta) {
                        *xi += di;
                    }
                }
                temporal_keys.push(out.mean_keys);
                temporal_attention.push(out.mean_probs);
            }

            // Temporal merge hook.
            let (tim_keys, tim_attn) = (temporal_keys.clone(), temporal_attention.clone());
            if plan.kind.temporal() {
                temporal::tim_tm(
                    &mut grid,
                    tim_keys,
                    &tim_attn,
                    plan.r_t,
                    &mut provenance,
                    opts,
                    layer,
                )?;
                if grid.n_t != expected[li].0 {
                    return Err(Error::MergeContractViolation(format!(
                        "layer {layer}: temporal merge left n_t = {}, expected {}",
                        grid.n_t, expected[li].0
                    )));
                }
            }

            // Spatial attention: one sequence per frame, CLS prepended.
            let has_cls = grid.cls.is_some();
            let frames: Vec<AttnOut> = (0..grid.n_t)
                .into_par_iter()
                .map(|t| {
                    let mut seq: Vec<&[f64]> = Vec::with_capacity(grid.n_s + 1);
                    if let Some(cls) = &grid.cls {
                        seq.push(cls);
                    }
                    for s in 0..grid.n_s {
                        seq.push(grid.token(t, s));
                    }
                    let sizes: Option<Vec<usize>> = opts.proportional_attention.then(|| {
                        let mut sz = Vec::with_capacity(seq.len());
                        if has_cls {
                            sz.push(1);
                        }
                        sz.extend((0..grid.n_s).map(|s| provenance.size(t, s)));
                        sz
                    });
                    self.attend(lw, &lw.ln_spatial, &seq, sizes.as_deref())
                })
                .collect();
            let off = usize::from(has_cls);
            let mut spatial_keys = Vec::with_capacity(grid.n_t);
            let mut cls_delta = vec![0.0; cfg.channels];
            for (t, out) in frames.into_iter().enumerate() {
                if has_cls {
                    for (ci, di) in cls_delta.iter_mut().zip(&out.deltas[0]) {
                        *ci += di / grid.n_t as f64;
                    }
                }
                for s in 0..grid.n_s {
                    let tok = grid.token_mut(t, s);
                    for (xi, di) in tok.iter_mut().zip(&out.deltas[s + off]) {
                        *xi += di;
                    }
                }
                spatial_keys.push(out.mean_keys[off..].to_vec());
            }
            if let Some(cls) = grid.cls.as_mut() {
                for (ci, di) in cls.iter_mut().zip(&cls_delta) {
                    *ci += di;
                }
            }

            // Spatial merge hook.
            if plan.kind.spatial() {
                let k = plan.k.segments(layer, cfg.layers);
                spatial::sim_tm(
                    &mut grid,
                    &spatial_keys,
                    plan.r_s,
                    plan.m,
                    k,
                    &mut provenance,
                    opts,
                    layer,
                )?;
                if grid.n_s != expected[li].1 {
                    return Err(Error::MergeContractViolation(format!(
                        "layer {layer}: spatial merge left n_s = {}, expected {}",
                        grid.n_s, expected[li].1
                    )));
                }
            }

            // MLP over every token, plus CLS.
            let chunk = grid.channels;
            grid.data
                .par_chunks_mut(chunk)
                .for_each(|tok| self.mlp_token(lw, tok));
            if let Some(cls) = grid.cls.as_mut() {
                self.mlp_token(lw, cls);
            }

            artifacts.push(AttentionArtifacts {
                temporal_keys,
                temporal_attention,
                spatial_keys,
            });
            layer_provenance.push(provenance.clone());
        }

        grid.assert_finite()?;
        Ok(ForwardOutput {
            grid,
            provenance,
            artifacts,
            layer_provenance,
        })
    }

    /// Named weight records in the shared binary tensor format.
    pub fn export_weights(&self) -> Vec<(String, Tensor)> {
        let c = self.config.channels;
        let patch_dim = self.config.tubelet * self.config.patch * self.config.patch * 3;
        let mut records = vec![
            (
                "patch_proj".to_string(),
                Tensor::from_f64(&[patch_dim, c], &self.patch_proj),
            ),
            (
                "cls_init".to_string(),
                Tensor::from_f64(&[c], &self.cls_init),
            ),
        ];
        for (i, lw) in self.layers.iter().enumerate() {
            for (name, data, dims) in [
                ("wq", &lw.wq, [c, c]),
                ("wk", &lw.wk, [c, c]),
                ("wv", &lw.wv, [c, c]),
                ("wo", &lw.wo, [c, c]),
                ("w1", &lw.w1, [c, 4 * c]),
                ("w2", &lw.w2, [4 * c, c]),
            ] {
                records.push((format!("layer{i}.{name}"), Tensor::from_f64(&dims, data)));
            }
        }
        records
    }

    /// Replace weights from named records previously produced by
    /// [`Encoder::export_weights`]. Unknown names are rejected.
    pub fn import_weights(&mut self, records: &[(String, Tensor)]) -> Result<()> {
        for (name, tensor) in records {
            let data = tensor.to_f64();
            match name.as_str() {
                "patch_proj" => self.patch_proj = data,
                "cls_init" => self.cls_init = data,
                other => {
                    let (layer, field) = other
                        .strip_prefix("layer")
                        .and_then(|rest| rest.split_once('.'))
                        .ok_or_else(|| Error::BadTensorFile(format!("unknown record {other}")))?;
                    let idx: usize = layer
                        .parse()
                        .map_err(|_| Error::BadTensorFile(format!("unknown record {other}")))?;
                    let lw = self
                        .layers
                        .get_mut(idx)
                        .ok_or_else(|| Error::BadTensorFile(format!("layer {idx} out of range")))?;
                    let slot = match field {
                        "wq" => &mut lw.wq,
                        "wk" => &mut lw.wk,
                        "wv" => &mut lw.wv,
                        "wo" => &mut lw.wo,
                        "w1" => &mut lw.w1,
                        "w2" => &mut lw.w2,
                        _ => return Err(Error::BadTensorFile(format!("unknown record {other}"))),
                    };
                    if data.len() != slot.len() {
                        return Err(Error::BadTensorFile(format!(
                            "record {other} has {} values, expected {}",
                            data.len(),
                            slot.len()
                        )));
                    }
                    *slot = data;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::MergeSchedule;

    fn small_config() -> ModelConfig {
        ModelConfig {
            frames: 4,
            height: 32,
            width: 32,
            patch: 16,
            tubelet: 1,
            channels: 16,
            layers: 2,
            heads: 2,
            cls_enabled: true,
        }
    }

    #[test]
    fn build_is_deterministic() {
        let cfg = small_config();
        let a = build_encoder(&cfg, 7).unwrap();
        let b = build_encoder(&cfg, 7).unwrap();
        assert_eq!(a.layers[0].wq, b.layers[0].wq);
        assert_eq!(a.patch_proj, b.patch_proj);
        let c = build_encoder(&cfg, 8).unwrap();
        assert_ne!(a.layers[0].wq, c.layers[0].wq);
    }

    #[test]
    fn weights_are_finite_and_bounded() {
        let cfg = ModelConfig {
            channels: 64,
            layers: 2,
            heads: 4,
            ..small_config()
        };
        let enc = build_encoder(&cfg, 0).unwrap();
        for lw in &enc.layers {
            for w in lw.wq.iter().chain(&lw.w1).chain(&lw.w2) {
                assert!(w.is_finite());
                assert!(w.abs() < 10.0);
            }
        }
    }

    #[test]
    fn bad_head_count_rejected() {
        let cfg = ModelConfig {
            channels: 64,
            heads: 5,
            ..small_config()
        };
        let err = build_encoder(&cfg, 0).unwrap_err().to_string();
        assert!(err.contains("C not divisible by heads"), "{err}");
    }

    #[test]
    fn tokenize_dims_and_zero_video() {
        let cfg = small_config();
        let enc = build_encoder(&cfg, 3).unwrap();
        let video = Video::zeros(4, 32, 32);
        let grid = enc.tokenize(&video).unwrap();
        assert_eq!(grid.n_t, 4);
        assert_eq!(grid.n_s, 4);
        // Linear map of zero: tokens equal the position code.
        let code = position_code(2, cfg.channels);
        assert_eq!(grid.token(0, 2), code.as_slice());
        assert_eq!(grid.token(3, 2), code.as_slice());
    }

    #[test]
    fn tokenize_tubelet_arithmetic() {
        let cfg = ModelConfig {
            frames: 8,
            tubelet: 2,
            ..small_config()
        };
        let enc = build_encoder(&cfg, 3).unwrap();
        let grid = enc.tokenize(&Video::zeros(8, 32, 32)).unwrap();
        assert_eq!(grid.n_t, 4);
        assert_eq!(grid.n_s, 4);
    }

    #[test]
    fn tokenize_rejects_mismatched_video() {
        let cfg = small_config();
        let enc = build_encoder(&cfg, 3).unwrap();
        assert!(enc.tokenize(&Video::zeros(4, 64, 32)).is_err());
    }

    #[test]
    fn forward_noop_schedule_preserves_dims() {
        let cfg = small_config();
        let enc = build_encoder(&cfg, 9).unwrap();
        let mut video = Video::zeros(4, 32, 32);
        for (i, v) in video.data.iter_mut().enumerate() {
            *v = ((i * 2654435761) % 1000) as f64 / 1000.0;
        }
        let grid = enc.tokenize(&video).unwrap();
        let out = enc
            .forward(&grid, &MergeSchedule::all_none(2), &MergeOptions::default())
            .unwrap();
        assert_eq!(out.grid.n_t, 4);
        assert_eq!(out.grid.n_s, 4);
        assert_eq!(out.provenance, ProvenanceMap::identity(4, 4));
        // Row-stochastic attention rows.
        for arts in &out.artifacts {
            for pos in &arts.temporal_attention {
                for row in pos {
                    let sum: f64 = row.iter().sum();
                    assert!((sum - 1.0).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let cfg = small_config();
        let enc = build_encoder(&cfg, 9).unwrap();
        let mut video = Video::zeros(4, 32, 32);
        for (i, v) in video.data.iter_mut().enumerate() {
            *v = ((i * 31) % 17) as f64 / 17.0;
        }
        let grid = enc.tokenize(&video).unwrap();
        let sched = MergeSchedule::temporal_then_spatial(2, 1, 1, 1, 2);
        let a = enc
            .forward(&grid, &sched, &MergeOptions::default())
            .unwrap();
        let b = enc
            .forward(&grid, &sched, &MergeOptions::default())
            .unwrap();
        assert_eq!(a.grid.data, b.grid.data);
        assert_eq!(a.provenance, b.provenance);
    }

    #[test]
    fn single_token_temporal_attention_is_identity() {
        let cfg = ModelConfig {
            frames: 1,
            ..small_config()
        };
        let enc = build_encoder(&cfg, 5).unwrap();
        let mut video = Video::zeros(1, 32, 32);
        for (i, v) in video.data.iter_mut().enumerate() {
            *v = (i % 7) as f64 / 7.0;
        }
        let grid = enc.tokenize(&video).unwrap();
        let out = enc
            .forward(&grid, &MergeSchedule::all_none(2), &MergeOptions::default())
            .unwrap();
        for arts in &out.artifacts {
            for pos in &arts.temporal_attention {
                assert_eq!(pos.len(), 1);
                assert!((pos[0][0] - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn weight_roundtrip_through_records() {
        let cfg = small_config();
        let enc = build_encoder(&cfg, 11).unwrap();
        let records = enc.export_weights();
        let mut other = build_encoder(&cfg, 99).unwrap();
        other.import_weights(&records).unwrap();
        // Files store f32, so the round trip is exact at f32 precision.
        for (a, b) in other.layers[1].w2.iter().zip(&enc.layers[1].w2) {
            assert!((a - b).abs() < 1e-6);
        }
        for (a, b) in other.patch_proj.iter().zip(&enc.patch_proj) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
