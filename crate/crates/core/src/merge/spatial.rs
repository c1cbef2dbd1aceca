//! Spatial information-mining merging.
//!
//! Frames are partitioned into temporal segments at depth-score boundaries.
//! Within a segment, each spatial position gets a static score (mean pairwise
//! key cosine across the segment's frames); the most static positions become
//! merge candidates and are reduced by bipartite soft matching. By default the
//! matching is computed once per segment from segment-mean keys and the same
//! merge pattern is applied to every frame of the segment, keeping the grid
//! spatially aligned.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::grid::{ProvenanceMap, TokenGrid};
use crate::kernels::cosine_similarity;
use crate::options::{MergeOptions, MergePolicy};

/// Mean over positions of the key cosine between adjacent frames.
///
/// `spatial_keys` is `[n_t][n_s][C_head]`. A track shorter than two frames
/// yields an empty curve (single segment).
pub fn frame_similarity_curve(spatial_keys: &[Vec<Vec<f64>>]) -> Vec<f64> {
    if spatial_keys.len() < 2 {
        return Vec::new();
    }
    let n_s = spatial_keys[0].len();
    spatial_keys
        .windows(2)
        .map(|w| {
            let sum: f64 = (0..n_s)
                .map(|i| cosine_similarity(&w[0][i], &w[1][i]))
                .sum();
            sum / n_s as f64
        })
        .collect()
}

/// Depth score `D(t) = max_{tau<t} S(tau) + max_{tau>t} S(tau) - 2 S(t)` on
/// interior curve indices. Returned values correspond to curve indices
/// `1..curve.len()-1`; endpoints have no defined score.
pub fn depth_scores(curve: &[f64]) -> Vec<f64> {
    if curve.len() < 3 {
        return Vec::new();
    }
    (1..curve.len() - 1)
        .map(|t| {
            let left = curve[..t].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let right = curve[t + 1..]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            left + right - 2.0 * curve[t]
        })
        .collect()
}

/// Pick `k - 1` boundaries from the depth scores.
///
/// A boundary is a curve index `j`: the split falls between frames `j` and
/// `j + 1`. Preference order: largest local maxima of the depth score, then
/// largest remaining values, then equal-length splitting when the score is
/// flat or there are no interior indices.
pub fn choose_boundaries(depth: &[f64], k: usize, n_t: usize) -> Vec<usize> {
    if k <= 1 || n_t < 2 {
        return Vec::new();
    }
    let wanted = (k - 1).min(n_t - 1);
    let flat = depth.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-12);
    let mut chosen: Vec<usize> = Vec::new();
    if !depth.is_empty() && !flat {
        // Depth index i maps to curve index i + 1.
        let is_local_max = |i: usize| -> bool {
            let left_ok = i == 0 || depth[i] >= depth[i - 1];
            let right_ok = i + 1 >= depth.len() || depth[i] >= depth[i + 1];
            left_ok && right_ok
        };
        let mut maxima: Vec<usize> = (0..depth.len()).filter(|&i| is_local_max(i)).collect();
        maxima.sort_by(|&a, &b| depth[b].partial_cmp(&depth[a]).unwrap().then(a.cmp(&b)));
        chosen.extend(maxima.into_iter().take(wanted));
        if chosen.len() < wanted {
            let mut rest: Vec<usize> = (0..depth.len()).filter(|i| !chosen.contains(i)).collect();
            rest.sort_by(|&a, &b| depth[b].partial_cmp(&depth[a]).unwrap().then(a.cmp(&b)));
            chosen.extend(rest.into_iter().take(wanted - chosen.len()));
        }
        chosen = chosen.into_iter().map(|i| i + 1).collect();
    }
    if chosen.len() < wanted {
        // Equal-length fallback: boundary after frame i*n_t/k.
        chosen = (1..k.min(n_t)).map(|i| i * n_t / k - 1).collect();
        chosen.retain(|&b| b + 1 < n_t);
        chosen.dedup();
    }
    chosen.sort_unstable();
    chosen.dedup();
    chosen
}

/// Static score per position over one segment: mean pairwise key cosine
/// across the segment's frames. A single-frame segment scores 1 everywhere.
pub fn static_scores(segment_keys: &[Vec<Vec<f64>>]) -> Vec<f64> {
    let t_s = segment_keys.len();
    let n_s = segment_keys[0].len();
    if t_s < 2 {
        return vec![1.0; n_s];
    }
    let pairs = (t_s * (t_s - 1) / 2) as f64;
    (0..n_s)
        .map(|i| {
            let mut sum = 0.0;
            for t in 0..t_s {
                for t2 in t + 1..t_s {
                    sum += cosine_similarity(&segment_keys[t][i], &segment_keys[t2][i]);
                }
            }
            sum / pairs
        })
        .collect()
}

/// Bipartite soft matching restricted to a candidate set: merge plan only.
///
/// Candidates are sorted by position index and alternately assigned to sets A
/// and B; each A position is matched to its most similar B position by key
/// cosine (similarity ties go to the nearest B index, equidistant ties to the
/// following one, so identical tokens pair up with their neighbors); the `r`
/// highest-similarity pairs win (ties to the smaller A index). Returns
/// `(a, b)` pairs, meaning position `a` merges into position `b`.
pub fn bsm_match(keys: &[Vec<f64>], candidates: &[usize], r: usize) -> Result<Vec<(usize, usize)>> {
    if r == 0 {
        return Ok(Vec::new());
    }
    let mut sorted: Vec<usize> = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let set_a: Vec<usize> = sorted.iter().copied().step_by(2).collect();
    let set_b: Vec<usize> = sorted.iter().copied().skip(1).step_by(2).collect();
    if r > set_a.len() || set_b.is_empty() {
        return Err(Error::CandidatePoolTooSmall {
            needed: r,
            available: set_a.len().min(set_b.len() * set_a.len().max(1)),
        });
    }
    let distance = |a: usize, b: usize| a.abs_diff(b);
    let mut matches: Vec<(usize, usize, f64)> = set_a
        .iter()
        .map(|&a| {
            let mut best = set_b[0];
            let mut best_sim = f64::NEG_INFINITY;
            for &b in &set_b {
                let sim = cosine_similarity(&keys[a], &keys[b]);
                let closer = sim == best_sim
                    && (distance(a, b) < distance(a, best)
                        || (distance(a, b) == distance(a, best) && b > best));
                if sim > best_sim || closer {
                    best_sim = sim;
                    best = b;
                }
            }
            (a, best, best_sim)
        })
        .collect();
    matches.sort_by(|x, y| y.2.partial_cmp(&x.2).unwrap().then(x.0.cmp(&y.0)));
    Ok(matches
        .into_iter()
        .take(r)
        .map(|(a, b, _)| (a, b))
        .collect())
}

/// Apply BSM over a candidate set to one frame of tokens.
///
/// Returns the merged frame (survivors in ascending position order), the
/// surviving position indices, and the merged sizes.
pub fn bsm_on_candidates(
    tokens: &[Vec<f64>],
    keys: &[Vec<f64>],
    candidates: &[usize],
    r_s: usize,
    sizes: &[usize],
) -> Result<(Vec<Vec<f64>>, Vec<usize>, Vec<usize>)> {
    let pairs = bsm_match(keys, candidates, r_s)?;
    let mut out_tokens: Vec<Vec<f64>> = tokens.to_vec();
    let mut out_sizes: Vec<usize> = sizes.to_vec();
    let mut removed = vec![false; tokens.len()];
    for &(a, b) in &pairs {
        let (sa, sb) = (out_sizes[a] as f64, out_sizes[b] as f64);
        let merged: Vec<f64> = out_tokens[a]
            .iter()
            .zip(&out_tokens[b])
            .map(|(&x, &y)| (sa * x + sb * y) / (sa + sb))
            .collect();
        out_tokens[b] = merged;
        out_sizes[b] = out_sizes[a] + out_sizes[b];
        removed[a] = true;
    }
    let survivors: Vec<usize> = (0..tokens.len()).filter(|&i| !removed[i]).collect();
    let merged_tokens = survivors.iter().map(|&i| out_tokens[i].clone()).collect();
    let merged_sizes = survivors.iter().map(|&i| out_sizes[i]).collect();
    Ok((merged_tokens, survivors, merged_sizes))
}

fn top_candidates(mu: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..mu.len()).collect();
    idx.sort_by(|&a, &b| mu[b].partial_cmp(&mu[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(count);
    idx
}

/// Remove `r_s` spatial positions per frame via static-prioritized BSM.
///
/// `spatial_keys` is `[n_t][n_s][C_head]` matching the grid; `k` is the
/// resolved segment count; `layer` (1-based) seeds the random control policy.
pub fn sim_tm(
    grid: &mut TokenGrid,
    spatial_keys: &[Vec<Vec<f64>>],
    r_s: usize,
    m: usize,
    k: usize,
    provenance: &mut ProvenanceMap,
    opts: &MergeOptions,
    layer: usize,
) -> Result<()> {
    if r_s == 0 {
        return Ok(());
    }
    let n_t = grid.n_t;
    let n_s = grid.n_s;
    if r_s >= n_s {
        return Err(Error::InvalidSchedule(format!(
            "R_S = {r_s} with only {n_s} positions"
        )));
    }
    if m * r_s > n_s {
        return Err(Error::InvalidSchedule(format!(
            "m*R_S = {} exceeds n_s = {n_s}",
            m * r_s
        )));
    }
    if spatial_keys.len() != n_t || spatial_keys.iter().any(|f| f.len() != n_s) {
        return Err(Error::DimensionMismatch(
            "spatial keys do not match grid".into(),
        ));
    }

    // Segment the frames.
    let boundaries = if k > 1 {
        let curve = frame_similarity_curve(spatial_keys);
        let depth = depth_scores(&curve);
        choose_boundaries(&depth, k, n_t)
    } else {
        Vec::new()
    };
    let mut segments: Vec<(usize, usize)> = Vec::new(); // inclusive frame ranges
    let mut start = 0usize;
    for &b in &boundaries {
        segments.push((start, b));
        start = b + 1;
    }
    segments.push((start, n_t - 1));

    let mut rng = match opts.policy {
        MergePolicy::Random { seed } => Some(ChaCha20Rng::seed_from_u64(
            seed ^ ((layer as u64) << 16) ^ 0x5151,
        )),
        MergePolicy::InformationMining => None,
    };

    let new_n_s = n_s - r_s;
    let mut new_grid = TokenGrid::zeros(n_t, new_n_s, grid.channels, false);
    new_grid.cls = grid.cls.take();
    let mut new_groups = vec![vec![Vec::new(); new_n_s]; n_t];

    for &(lo, hi) in &segments {
        let seg_frames = hi - lo + 1;
        let candidates: Vec<usize> = match &mut rng {
            Some(rng) => {
                let mut all: Vec<usize> = (0..n_s).collect();
                all.shuffle(rng);
                all.truncate(m * r_s);
                all
            }
            None => {
                let seg_keys = &spatial_keys[lo..=hi];
                let mu = static_scores(seg_keys);
                top_candidates(&mu, m * r_s)
            }
        };

        // One matching per segment from segment-mean keys, unless the
        // per-frame literal reading is requested.
        let shared_pairs: Option<Vec<(usize, usize)>> = if opts.per_frame_matching {
            None
        } else {
            let mean_keys: Vec<Vec<f64>> = (0..n_s)
                .map(|i| {
                    let dim = spatial_keys[lo][i].len();
                    let mut acc = vec![0.0; dim];
                    for t in lo..=hi {
                        for (a, v) in acc.iter_mut().zip(&spatial_keys[t][i]) {
                            *a += v / seg_frames as f64;
                        }
                    }
                    acc
                })
                .collect();
            Some(match &mut rng {
                Some(rng) => random_pairs(&candidates, r_s, rng)?,
                None => bsm_match(&mean_keys, &candidates, r_s)?,
            })
        };

        for t in lo..=hi {
            let pairs = match &shared_pairs {
                Some(p) => p.clone(),
                None => match &mut rng {
                    Some(rng) => random_pairs(&candidates, r_s, rng)?,
                    None => bsm_match(&spatial_keys[t][..], &candidates, r_s)?,
                },
            };
            let mut removed = vec![false; n_s];
            let mut tokens: Vec<Vec<f64>> = (0..n_s).map(|s| grid.token(t, s).to_vec()).collect();
            let mut groups: Vec<Vec<(usize, usize)>> = (0..n_s)
                .map(|s| std::mem::take(&mut provenance.groups[t][s]))
                .collect();
            let mut sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
            for &(a, b) in &pairs {
                let (sa, sb) = (sizes[a] as f64, sizes[b] as f64);
                let merged: Vec<f64> = tokens[a]
                    .iter()
                    .zip(&tokens[b])
                    .map(|(&x, &y)| (sa * x + sb * y) / (sa + sb))
                    .collect();
                tokens[b] = merged;
                sizes[b] += sizes[a];
                let moved = std::mem::take(&mut groups[a]);
                groups[b].extend(moved);
                removed[a] = true;
            }
            let mut out = 0usize;
            for s in 0..n_s {
                if removed[s] {
                    continue;
                }
                new_grid.set_token(t, out, &tokens[s]);
                new_groups[t][out] = std::mem::take(&mut groups[s]);
                out += 1;
            }
            if out != new_n_s {
                return Err(Error::MergeContractViolation(format!(
                    "frame {t}: {out} survivors, expected {new_n_s}"
                )));
            }
        }
    }

    *grid = new_grid;
    provenance.groups = new_groups;
    Ok(())
}

fn random_pairs(
    candidates: &[usize],
    r: usize,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<(usize, usize)>> {
    let mut sorted: Vec<usize> = candidates.to_vec();
    sorted.sort_unstable();
    let set_a: Vec<usize> = sorted.iter().copied().step_by(2).collect();
    let set_b: Vec<usize> = sorted.iter().copied().skip(1).step_by(2).collect();
    if r > set_a.len() || set_b.is_empty() {
        return Err(Error::CandidatePoolTooSmall {
            needed: r,
            available: set_a.len(),
        });
    }
    let mut chosen_a = set_a.clone();
    chosen_a.shuffle(rng);
    chosen_a.truncate(r);
    Ok(chosen_a
        .into_iter()
        .map(|a| (a, set_b[rng.gen_range(0..set_b.len())]))
        .collect())
}
