//! Joint-merging baseline over all spatiotemporal tokens, plus the unmerge
//! operator that replicates merged embeddings back to dense resolution.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Cell, ProvenanceMap, TokenGrid};
use crate::merge::spatial::bsm_match;

/// Flat set of tokens with sizes and source-cell provenance.
///
/// Invariant: the origin sets partition the original grid, so the sizes sum
/// to the original cell count.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatTokenSet {
    pub tokens: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub origins: Vec<Vec<Cell>>,
}

impl FlatTokenSet {
    /// Flatten a grid in (t, s) scan order, one singleton origin per token.
    pub fn from_grid(grid: &TokenGrid) -> Self {
        let mut tokens = Vec::with_capacity(grid.n_t * grid.n_s);
        let mut origins = Vec::with_capacity(grid.n_t * grid.n_s);
        for t in 0..grid.n_t {
            for s in 0..grid.n_s {
                tokens.push(grid.token(t, s).to_vec());
                origins.push(vec![(t, s)]);
            }
        }
        let sizes = vec![1; tokens.len()];
        FlatTokenSet {
            tokens,
            sizes,
            origins,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// One round of bipartite soft matching over the whole set.
///
/// Tokens are alternately assigned to sets A and B by index; the `r_joint`
/// most similar A-to-B pairs are merged by size-weighted averaging.
pub fn tome_merge(set: &FlatTokenSet, keys: &[Vec<f64>], r_joint: usize) -> Result<FlatTokenSet> {
    let n = set.len();
    if keys.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} keys for {n} tokens",
            keys.len()
        )));
    }
    if r_joint > n / 2 {
        return Err(Error::InvalidSchedule(format!(
            "R_joint = {r_joint} exceeds floor(N/2) = {}",
            n / 2
        )));
    }
    if r_joint == 0 {
        return Ok(set.clone());
    }
    let all: Vec<usize> = (0..n).collect();
    let pairs = bsm_match(keys, &all, r_joint)?;
    let mut tokens = set.tokens.clone();
    let mut sizes = set.sizes.clone();
    let mut origins = set.origins.clone();
    let mut removed = vec![false; n];
    for &(a, b) in &pairs {
        let (sa, sb) = (sizes[a] as f64, sizes[b] as f64);
        let merged: Vec<f64> = tokens[a]
            .iter()
            .zip(&tokens[b])
            .map(|(&x, &y)| (sa * x + sb * y) / (sa + sb))
            .collect();
        tokens[b] = merged;
        sizes[b] += sizes[a];
        let moved = std::mem::take(&mut origins[a]);
        origins[b].extend(moved);
        removed[a] = true;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| !removed[i]).collect();
    Ok(FlatTokenSet {
        tokens: keep.iter().map(|&i| tokens[i].clone()).collect(),
        sizes: keep.iter().map(|&i| sizes[i]).collect(),
        origins: keep
            .iter()
            .map(|&i| std::mem::take(&mut origins[i]))
            .collect(),
    })
}

/// Replicate each live token back to every original cell in its provenance
/// group. Output dims equal the original dims exactly.
pub fn unmerge(grid: &TokenGrid, provenance: &ProvenanceMap) -> Result<TokenGrid> {
    provenance.validate_partition()?;
    let c = grid.channels;
    let mut out = TokenGrid::zeros(provenance.orig_t, provenance.orig_s, c, false);
    out.cls = grid.cls.clone();
    // Cell -> (live t, live s) lookup, then fill rows in parallel.
    let mut owner = vec![(0usize, 0usize); provenance.orig_t * provenance.orig_s];
    for (t, row) in provenance.groups.iter().enumerate() {
        if t >= grid.n_t || row.len() != grid.n_s {
            return Err(Error::DimensionMismatch(
                "provenance shape does not match the merged grid".into(),
            ));
        }
        for (s, group) in row.iter().enumerate() {
            for &(t0, s0) in group {
                owner[t0 * provenance.orig_s + s0] = (t, s);
            }
        }
    }
    out.data
        .par_chunks_mut(c)
        .enumerate()
        .for_each(|(cell, dst)| {
            let (t, s) = owner[cell];
            dst.copy_from_slice(grid.token(t, s));
        });
    Ok(out)
}

/// Replicate a flat token set back onto the original grid.
pub fn unmerge_flat(set: &FlatTokenSet, orig_t: usize, orig_s: usize) -> Result<TokenGrid> {
    let c = if set.is_empty() {
        0
    } else {
        set.tokens[0].len()
    };
    let mut seen = vec![false; orig_t * orig_s];
    let mut out = TokenGrid::zeros(orig_t, orig_s, c, false);
    for (token, origin) in set.tokens.iter().zip(&set.origins) {
        for &(t0, s0) in origin {
            if t0 >= orig_t || s0 >= orig_s || seen[t0 * orig_s + s0] {
                return Err(Error::ProvenanceNotPartition(format!(
                    "cell ({t0}, {s0}) out of range or claimed twice"
                )));
            }
            seen[t0 * orig_s + s0] = true;
            out.set_token(t0, s0, token);
        }
    }
    if !seen.iter().all(|&v| v) {
        return Err(Error::ProvenanceNotPartition(
            "uncovered cells remain".into(),
        ));
    }
    Ok(out)
}
