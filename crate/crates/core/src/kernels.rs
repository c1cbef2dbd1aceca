//! Shared numeric kernels used by every merging module: cosine similarity,
//! stabilized softmax, negative entropy, and min-max scaling.
//!
//! All kernels are pure `f64` functions. Degenerate inputs follow the
//! engine-wide conventions: zero-norm vectors have similarity 0 to anything,
//! and a constant vector min-max scales to all 0.5.

use crate::error::{Error, Result};

/// Tolerance under which a norm is treated as zero.
pub const ZERO_NORM_EPS: f64 = 1e-300;

/// Tolerance under which a min-max range is treated as degenerate.
pub const DEGENERATE_RANGE_EPS: f64 = 1e-12;

/// Cosine similarity of two equal-length vectors, in `[-1, 1]`.
///
/// A zero-norm operand yields 0: degenerate features never look similar
/// to anything, so they are never preferred for merging.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na <= ZERO_NORM_EPS || nb <= ZERO_NORM_EPS {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Numerically stabilized softmax over one attention row.
pub fn softmax_row(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::EmptyAttentionRow);
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    Ok(out)
}

/// Negative entropy `Σ p ln p` of a probability vector, with `0 ln 0 := 0`.
///
/// High values (near 0) mean concentrated mass; the minimum `-ln(len)` is
/// reached by the uniform distribution. Natural log throughout; the base
/// cancels after min-max scaling.
pub fn negative_entropy(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty vector".into()));
    }
    let mut sum = 0.0;
    for &v in p {
        if v < 0.0 {
            return Err(Error::InvalidDistribution(format!("negative entry {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }
    let mut h = 0.0;
    for &v in p {
        if v > 0.0 {
            h += v * v.ln();
        }
    }
    Ok(h)
}

/// Min-max scale a non-empty vector into `[0, 1]`.
///
/// A (near-)constant input maps to all 0.5 so the downstream weighted
/// fusion degrades to an unweighted average.
pub fn minmax_scale(values: &[f64]) -> Vec<f64> {
    assert!(!values.is_empty(), "minmax_scale of empty vector");
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max - min <= DEGENERATE_RANGE_EPS {
        return vec![0.5; values.len()];
    }
    values.iter().map(|&v| (v - min) / (max - min)).collect()
}
