//! Diagnostic instruments: token-similarity curves over temporal distance,
//! static/dynamic similarity comparison, and an information-bottleneck score
//! estimator built from class centroids and softmax-normalized distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::cosine_similarity;

/// Probe setup for the temporal similarity study.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityStudyConfig {
    /// Largest inter-frame distance probed.
    pub d_max: usize,
    /// Odd window edge length; window pairs compare a position against its
    /// k x k spatial neighborhood excluding itself.
    pub window: usize,
    /// 1-based encoder layer whose keys are probed.
    pub layer: usize,
    /// Cap on pairs per distance, 0 = use all pairs.
    #[serde(default)]
    pub sample_limit: usize,
}

impl SimilarityStudyConfig {
    pub fn validate(&self, n_t: usize) -> Result<()> {
        if self.d_max == 0 || self.d_max >= n_t {
            return Err(Error::InvalidConfig(format!(
                "d_max = {} must be in [1, n_t) with n_t = {n_t}",
                self.d_max
            )));
        }
        if self.window % 2 == 0 || self.window == 0 {
            return Err(Error::InvalidConfig(format!(
                "window = {} must be odd",
                self.window
            )));
        }
        Ok(())
    }
}

/// Mean-similarity curves indexed by distance d = 1..=d_max.
#[derive(Debug, Clone, Serialize)]
pub struct SimilarityCurves {
    pub distances: Vec<usize>,
    pub same_position: Vec<f64>,
    pub same_position_pairs: Vec<usize>,
    /// Empty when the window is 1x1.
    pub window: Vec<f64>,
    pub window_pairs: Vec<usize>,
}

/// Mean key cosine between frames `t` and `t + d`, same-position and
/// windowed-position variants.
///
/// `keys` is `[n_t][n_s][C]` with `n_s = grid_h * grid_w` row-major.
pub fn temporal_similarity_study(
    keys: &[Vec<Vec<f64>>],
    grid_h: usize,
    grid_w: usize,
    config: &SimilarityStudyConfig,
) -> Result<SimilarityCurves> {
    let n_t = keys.len();
    config.validate(n_t)?;
    let n_s = grid_h * grid_w;
    if keys.iter().any(|f| f.len() != n_s) {
        return Err(Error::DimensionMismatch(format!(
            "keys per frame do not match the {grid_h}x{grid_w} grid"
        )));
    }
    let half = (config.window / 2) as isize;
    let mut curves = SimilarityCurves {
        distances: (1..=config.d_max).collect(),
        same_position: Vec::new(),
        same_position_pairs: Vec::new(),
        window: Vec::new(),
        window_pairs: Vec::new(),
    };
    for d in 1..=config.d_max {
        let mut same_sum = 0.0;
        let mut same_n = 0usize;
        let mut win_sum = 0.0;
        let mut win_n = 0usize;
        'outer: for t in 0..n_t - d {
            for gy in 0..grid_h {
                for gx in 0..grid_w {
                    let i = gy * grid_w + gx;
                    same_sum += cosine_similarity(&keys[t][i], &keys[t + d][i]);
                    same_n += 1;
                    for dy in -half..=half {
                        for dx in -half..=half {
                            if dy == 0 && dx == 0 {
                                continue;
                            }
                            let (ny, nx) = (gy as isize + dy, gx as isize + dx);
                            if ny < 0 || nx < 0 || ny >= grid_h as isize || nx >= grid_w as isize {
                                continue;
                            }
                            let j = ny as usize * grid_w + nx as usize;
                            win_sum += cosine_similarity(&keys[t][i], &keys[t + d][j]);
                            win_n += 1;
                        }
                    }
                    if config.sample_limit > 0 && same_n >= config.sample_limit {
                        break 'outer;
                    }
                }
            }
        }
        curves.same_position.push(same_sum / same_n as f64);
        curves.same_position_pairs.push(same_n);
        if win_n > 0 {
            curves.window.push(win_sum / win_n as f64);
            curves.window_pairs.push(win_n);
        }
    }
    Ok(curves)
}

/// Class means of intra-frame similarity for static vs dynamic positions.
///
/// A token's intra-frame similarity is its mean cosine to every other token
/// in its frame. `None` marks an undefined mean (empty class or single-token
/// frames).
pub fn static_dynamic_similarity(
    keys: &[Vec<Vec<f64>>],
    dynamic_mask: &[bool],
) -> Result<(Option<f64>, Option<f64>)> {
    let n_s = dynamic_mask.len();
    if keys.iter().any(|f| f.len() != n_s) {
        return Err(Error::DimensionMismatch("mask does not match n_s".into()));
    }
    if n_s < 2 {
        return Ok((None, None));
    }
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for frame in keys {
        for i in 0..n_s {
            let mut s = 0.0;
            for j in 0..n_s {
                if j != i {
                    s += cosine_similarity(&frame[i], &frame[j]);
                }
            }
            let class = usize::from(dynamic_mask[i]);
            sums[class] += s / (n_s - 1) as f64;
            counts[class] += 1;
        }
    }
    let mean = |c: usize| {
        if counts[c] > 0 {
            Some(sums[c] / counts[c] as f64)
        } else {
            None
        }
    };
    Ok((mean(0), mean(1)))
}

/// Samples for the IB estimate: merged representations, raw references, and
/// categorical labels.
#[derive(Debug, Clone)]
pub struct IBInputs {
    pub z: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IBParams {
    /// Cluster count for the input-side quantization.
    pub n_x: usize,
    /// Softmax temperature over negative squared distances.
    pub temperature: f64,
}

impl Default for IBParams {
    fn default() -> Self {
        IBParams {
            n_x: 16,
            temperature: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IbScore {
    pub i_zx: f64,
    pub i_zy: f64,
    /// `i_zx - i_zy`; lower means better compression at equal label info.
    pub ib: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn entropy_nats(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

/// Softmax of negative squared distances from `z` to each centroid.
fn membership(z: &[f64], centroids: &[Vec<f64>], temp: f64) -> Vec<f64> {
    let logits: Vec<f64> = centroids.iter().map(|c| -sq_dist(z, c) / temp).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn empirical_entropy(labels: &[usize], n_classes: usize) -> f64 {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    entropy_nats(&counts.iter().map(|&c| c as f64 / n).collect::<Vec<_>>())
}

/// `H(labels) - mean_z H(p(label | z))`, clamped at zero.
fn mi_estimate(
    z: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    centroids: &[Vec<f64>],
    temp: f64,
) -> f64 {
    let h_label = empirical_entropy(labels, n_classes);
    let mean_cond: f64 = z
        .iter()
        .map(|zi| entropy_nats(&membership(zi, centroids, temp)))
        .sum::<f64>()
        / z.len() as f64;
    (h_label - mean_cond).max(0.0)
}

fn class_centroids(points: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; n_classes];
    let mut counts = vec![0usize; n_classes];
    for (p, &l) in points.iter().zip(labels) {
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
        counts[l] += 1;
    }
    sums.iter_mut().zip(&counts).for_each(|(s, &c)| {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    });
    sums
}

/// Deterministic, sample-order-invariant k-means labeling.
///
/// Init picks evenly spaced points from the canonically sorted sample list;
/// Lloyd iterations then run to a fixed cap. Ties in assignment go to the
/// lowest cluster index.
fn quantize(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    let k = k.min(points.len()).max(1);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .partial_cmp(&points[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(std::cmp::Ordering::Equal)
    });
    let mut centroids: Vec<Vec<f64>> = (0..k)
        .map(|i| points[order[i * points.len() / k]].clone())
        .collect();
    let mut labels = vec![0usize; points.len()];
    for _ in 0..25 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = (0usize, f64::INFINITY);
            for (j, c) in centroids.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best.1 {
                    best = (j, d);
                }
            }
            if labels[i] != best.0 {
                labels[i] = best.0;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
            counts[l] += 1;
        }
        for (j, c) in centroids.iter_mut().enumerate() {
            if counts[j] > 0 {
                *c = sums[j].iter().map(|v| v / counts[j] as f64).collect();
            }
        }
    }
    // Compact away empty clusters so entropies see only live cells.
    let mut remap = vec![usize::MAX; k];
    let mut next = 0;
    for &l in &labels {
        if remap[l] == usize::MAX {
            remap[l] = next;
            next += 1;
        }
    }
    // Renumber in ascending original-cluster order for order invariance.
    let mut live: Vec<usize> = (0..k).filter(|&j| remap[j] != usize::MAX).collect();
    live.sort_unstable();
    for (rank, &j) in live.iter().enumerate() {
        remap[j] = rank;
    }
    labels.iter().map(|&l| remap[l]).collect()
}

/// Estimate `(I(Z,X), I(Z,Y), IB = I(Z,X) - I(Z,Y))`.
///
/// The label side uses class centroids of Z. The input side quantizes X by
/// nearest-centroid clustering, then measures how well Z locates each sample
/// among the Z-space images of those clusters.
pub fn ib_score(inputs: &IBInputs, params: &IBParams) -> Result<IbScore> {
    let n = inputs.z.len();
    if inputs.x.len() != n || inputs.y.len() != n {
        return Err(Error::DimensionMismatch(
            "ib inputs have unequal sample counts".into(),
        ));
    }
    let n_classes = inputs.y.iter().copied().max().map_or(0, |m| m + 1);
    if n_classes < 2 {
        return Err(Error::InvalidConfig(
            "ib score needs at least 2 classes".into(),
        ));
    }
    if n < n_classes {
        return Err(Error::InvalidConfig(format!(
            "{n} samples for {n_classes} classes"
        )));
    }
    if params.temperature <= 0.0 || params.n_x < 2 {
        return Err(Error::InvalidConfig(
            "ib params: temperature > 0 and n_x >= 2".into(),
        ));
    }

    // Canonical sample order: every sum below then runs in a fixed sequence,
    // making the result exactly invariant to input permutation.
    let cmp_vec = |a: &[f64], b: &[f64]| -> std::cmp::Ordering {
        for (x, y) in a.iter().zip(b) {
            let ord = x.total_cmp(y);
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
        a.len().cmp(&b.len())
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        inputs.y[a]
            .cmp(&inputs.y[b])
            .then_with(|| cmp_vec(&inputs.x[a], &inputs.x[b]))
            .then_with(|| cmp_vec(&inputs.z[a], &inputs.z[b]))
    });
    let z: Vec<Vec<f64>> = order.iter().map(|&i| inputs.z[i].clone()).collect();
    let x: Vec<Vec<f64>> = order.iter().map(|&i| inputs.x[i].clone()).collect();
    let y: Vec<usize> = order.iter().map(|&i| inputs.y[i]).collect();

    let y_centroids = class_centroids(&z, &y, n_classes);
    let i_zy = mi_estimate(&z, &y, n_classes, &y_centroids, params.temperature);

    let x_labels = quantize(&x, params.n_x);
    let n_cells = x_labels.iter().copied().max().unwrap() + 1;
    let cell_images = class_centroids(&z, &x_labels, n_cells);
    let i_zx = mi_estimate(&z, &x_labels, n_cells, &cell_images, params.temperature);

    Ok(IbScore {
        i_zx,
        i_zy,
        ib: i_zx - i_zy,
    })
}
