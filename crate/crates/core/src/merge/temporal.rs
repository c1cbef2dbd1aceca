//! Temporal information-mining merging.
//!
//! For each spatial position independently: score adjacent frame pairs by
//! key cosine similarity, pick the most similar pair, and fuse it with
//! saliency weights derived from the temporal attention rows (min-max-scaled
//! negative entropy). Removing `R_T` frames takes `R_T` successive single-pair
//! iterations; similarities are recomputed on the fused keys each iteration
//! while saliencies stay fixed for the layer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Cell, ProvenanceMap, TokenGrid};
use crate::kernels::{cosine_similarity, minmax_scale, negative_entropy};
use crate::options::{MergeOptions, MergePolicy};

/// Cosine similarity of each adjacent key pair along one position's track.
pub fn adjacent_similarities(keys: &[Vec<f64>]) -> Result<Vec<f64>> {
    if keys.len() < 2 {
        return Err(Error::NothingToMerge);
    }
    Ok(keys
        .windows(2)
        .map(|w| cosine_similarity(&w[0], &w[1]))
        .collect())
}

/// Index of the most similar adjacent pair; ties go to the smallest index.
pub fn select_pair(sims: &[f64]) -> usize {
    debug_assert!(!sims.is_empty());
    let mut best = 0;
    for (i, &s) in sims.iter().enumerate().skip(1) {
        if s > sims[best] {
            best = i;
        }
    }
    best
}

/// Saliency weights for one position: min-max-scaled negative entropy of its
/// temporal attention rows.
pub fn saliency_weights(temporal_attention: &[Vec<f64>]) -> Result<Vec<f64>> {
    let entropies = temporal_attention
        .iter()
        .map(|row| negative_entropy(row))
        .collect::<Result<Vec<f64>>>()?;
    Ok(minmax_scale(&entropies))
}

/// Fuse one token pair with saliency weights.
///
/// With `raw = false` the weights are renormalized by their sum so the result
/// stays in the pair's convex hull; both-zero weights fall back to the
/// unweighted mean. With `raw = true` the scaled weights apply literally.
pub fn merge_pair(a: &[f64], b: &[f64], w_a: f64, w_b: f64, raw: bool) -> Vec<f64> {
    let (wa, wb) = if raw {
        (w_a, w_b)
    } else if w_a + w_b < 1e-12 {
        (0.5, 0.5)
    } else {
        (w_a / (w_a + w_b), w_b / (w_a + w_b))
    };
    a.iter().zip(b).map(|(&x, &y)| wa * x + wb * y).collect()
}

struct TrackResult {
    tokens: Vec<Vec<f64>>,
    groups: Vec<Vec<Cell>>,
}

fn merge_track(
    mut tokens: Vec<Vec<f64>>,
    mut keys: Vec<Vec<f64>>,
    attention: &[Vec<f64>],
    mut groups: Vec<Vec<Cell>>,
    r_t: usize,
    opts: &MergeOptions,
    rng_seed: Option<u64>,
) -> Result<TrackResult> {
    let mut alpha = saliency_weights(attention)?;
    let mut rng = rng_seed.map(ChaCha20Rng::seed_from_u64);
    for _ in 0..r_t {
        let idx = match &mut rng {
            // Control policy: uniform random adjacent pair, equal weights.
            Some(rng) => rng.gen_range(0..tokens.len() - 1),
            None => {
                let sims = adjacent_similarities(&keys)?;
                select_pair(&sims)
            }
        };
        let (wa, wb) = if rng.is_some() {
            (0.5, 0.5)
        } else {
            (alpha[idx], alpha[idx + 1])
        };
        tokens[idx] = merge_pair(
            &tokens[idx],
            &tokens[idx + 1],
            wa,
            wb,
            opts.raw_fusion_weights,
        );
        keys[idx] = merge_pair(&keys[idx], &keys[idx + 1], wa, wb, opts.raw_fusion_weights);
        alpha[idx] = if opts.raw_fusion_weights || wa + wb < 1e-12 {
            0.5 * (alpha[idx] + alpha[idx + 1])
        } else {
            (wa * alpha[idx] + wb * alpha[idx + 1]) / (wa + wb)
        };
        let absorbed = groups.remove(idx + 1);
        groups[idx].extend(absorbed);
        tokens.remove(idx + 1);
        keys.remove(idx + 1);
        alpha.remove(idx + 1);
    }
    Ok(TrackResult { tokens, groups })
}

/// Remove `r_t` temporal entries from every position's track.
///
/// `temporal_keys` is `[n_s][n_t][C_head]`, `temporal_attention` is
/// `[n_s][n_t][n_t]`; both must match the grid. `layer` (1-based) seeds the
/// random control policy.
pub fn tim_tm(
    grid: &mut TokenGrid,
    temporal_keys: Vec<Vec<Vec<f64>>>,
    temporal_attention: &[Vec<Vec<f64>>],
    r_t: usize,
    provenance: &mut ProvenanceMap,
    opts: &MergeOptions,
    layer: usize,
) -> Result<()> {
    if r_t == 0 {
        return Ok(());
    }
    if r_t >= grid.n_t {
        return Err(Error::InvalidSchedule(format!(
            "R_T = {r_t} with only {} temporal tokens",
            grid.n_t
        )));
    }
    if temporal_keys.len() != grid.n_s || temporal_attention.len() != grid.n_s {
        return Err(Error::DimensionMismatch(
            "temporal artifacts do not match grid".into(),
        ));
    }
    let n_t = grid.n_t;
    let n_s = grid.n_s;
    let base_seed = match opts.policy {
        MergePolicy::Random { seed } => Some(seed),
        MergePolicy::InformationMining => None,
    };

    let results: Vec<TrackResult> = (0..n_s)
        .into_par_iter()
        .zip(temporal_keys)
        .map(|(s, keys)| {
            let tokens: Vec<Vec<f64>> = (0..n_t).map(|t| grid.token(t, s).to_vec()).collect();
            let groups: Vec<Vec<Cell>> =
                (0..n_t).map(|t| provenance.groups[t][s].clone()).collect();
            let seed = base_seed
                .map(|b| b ^ ((layer as u64) << 32) ^ (s as u64).wrapping_mul(0x9e3779b97f4a7c15));
            merge_track(
                tokens,
                keys,
                &temporal_attention[s],
                groups,
                r_t,
                opts,
                seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let new_n_t = n_t - r_t;
    let mut new_grid = TokenGrid::zeros(new_n_t, n_s, grid.channels, false);
    new_grid.cls = grid.cls.take();
    let mut new_groups = vec![vec![Vec::new(); n_s]; new_n_t];
    for (s, res) in results.into_iter().enumerate() {
        debug_assert_eq!(res.tokens.len(), new_n_t);
        for (t, tok) in res.tokens.into_iter().enumerate() {
            new_grid.set_token(t, s, &tok);
        }
        for (t, g) in res.groups.into_iter().enumerate() {
            new_groups[t][s] = g;
        }
    }
    *grid = new_grid;
    provenance.groups = new_groups;
    Ok(())
}
