//! Token grids and merge provenance.

use crate::error::{Error, Result};

/// Original grid cell: (frame index, spatial position index) before any merging.
pub type Cell = (usize, usize);

/// Rectangular grid of token embeddings: `n_t` temporal entries per track,
/// `n_s` spatial positions per frame, `channels` each, plus an optional
/// CLS vector kept outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenGrid {
    pub n_t: usize,
    pub n_s: usize,
    pub channels: usize,
    /// Row-major `[n_t][n_s][channels]`.
    pub data: Vec<f64>,
    pub cls: Option<Vec<f64>>,
}

impl TokenGrid {
    pub fn zeros(n_t: usize, n_s: usize, channels: usize, cls: bool) -> Self {
        TokenGrid {
            n_t,
            n_s,
            channels,
            data: vec![0.0; n_t * n_s * channels],
            cls: if cls { Some(vec![0.0; channels]) } else { None },
        }
    }

    #[inline]
    fn offset(&self, t: usize, s: usize) -> usize {
        (t * self.n_s + s) * self.channels
    }

    #[inline]
    pub fn token(&self, t: usize, s: usize) -> &[f64] {
        let o = self.offset(t, s);
        &self.data[o..o + self.channels]
    }

    #[inline]
    pub fn token_mut(&mut self, t: usize, s: usize) -> &mut [f64] {
        let o = self.offset(t, s);
        let c = self.channels;
        &mut self.data[o..o + c]
    }

    pub fn set_token(&mut self, t: usize, s: usize, values: &[f64]) {
        self.token_mut(t, s).copy_from_slice(values);
    }

    pub fn assert_finite(&self) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite())
            || self
                .cls
                .as_ref()
                .is_some_and(|c| c.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Other("non-finite token entry".into()));
        }
        Ok(())
    }
}

/// For every live grid cell, the set of original cells it has absorbed.
///
/// Groups partition the original `orig_t x orig_s` grid: disjoint and
/// exhaustive, with `size == |group|` per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ProvenanceMap {
    pub orig_t: usize,
    pub orig_s: usize,
    /// Indexed `[live t][live s]`; each entry is a non-empty set of original cells.
    pub groups: Vec<Vec<Vec<Cell>>>,
}

impl ProvenanceMap {
    /// Identity provenance: every live cell owns exactly its own original cell.
    pub fn identity(n_t: usize, n_s: usize) -> Self {
        let groups = (0..n_t)
            .map(|t| (0..n_s).map(|s| vec![(t, s)]).collect())
            .collect();
        ProvenanceMap {
            orig_t: n_t,
            orig_s: n_s,
            groups,
        }
    }

    pub fn live_t(&self) -> usize {
        self.groups.len()
    }

    pub fn live_s(&self) -> usize {
        self.groups.first().map_or(0, Vec::len)
    }

    pub fn size(&self, t: usize, s: usize) -> usize {
        self.groups[t][s].len()
    }

    pub fn total_size(&self) -> usize {
        self.groups.iter().flatten().map(Vec::len).sum()
    }

    /// Check disjointness and exhaustiveness over the original grid.
    pub fn validate_partition(&self) -> Result<()> {
        let mut seen = vec![false; self.orig_t * self.orig_s];
        for row in &self.groups {
            for group in row {
                if group.is_empty() {
                    return Err(Error::ProvenanceNotPartition("empty group".into()));
                }
                for &(t, s) in group {
                    if t >= self.orig_t || s >= self.orig_s {
                        return Err(Error::ProvenanceNotPartition(format!(
                            "cell ({t},{s}) outside original {}x{} grid",
                            self.orig_t, self.orig_s
                        )));
                    }
                    let idx = t * self.orig_s + s;
                    if seen[idx] {
                        return Err(Error::ProvenanceNotPartition(format!(
                            "cell ({t},{s}) appears in two groups"
                        )));
                    }
                    seen[idx] = true;
                }
            }
        }
        if seen.iter().any(|&v| !v) {
            return Err(Error::ProvenanceNotPartition("not exhaustive".into()));
        }
        Ok(())
    }

    /// Group id per original cell, row-major `[orig_t][orig_s]`. Live cells are
    /// numbered in (t, s) scan order.
    pub fn group_ids(&self) -> Vec<Vec<usize>> {
        let mut ids = vec![vec![usize::MAX; self.orig_s]; self.orig_t];
        let mut next = 0usize;
        for row in &self.groups {
            for group in row {
                for &(t, s) in group {
                    ids[t][s] = next;
                }
                next += 1;
            }
        }
        ids
    }
}
