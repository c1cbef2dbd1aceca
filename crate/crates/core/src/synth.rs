//! Synthetic clip generator: static textured background, one moving textured
//! square, optional per-pixel noise, and a ground-truth dynamic patch mask
//! derived by auditing actual pixel changes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::video::Video;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trajectory {
    Linear,
    Sinusoidal,
}

/// Recipe for one clip.
///
/// The trajectory reflects off frame edges so the object stays in-frame; a
/// spec whose object cannot fit at all is rejected. The dynamic mask marks
/// exactly the patches whose pixel content changes between consecutive frames
/// by more than twice the noise amplitude (per-pixel noise is bounded by the
/// amplitude, so static patches never cross the threshold).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticVideoSpec {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub texture_seed: u64,
    pub object_size: usize,
    /// Pixels per frame along (x, y). For the sinusoidal trajectory the y
    /// component is the oscillation amplitude.
    pub velocity: (f64, f64),
    pub trajectory: Trajectory,
    /// Uniform noise amplitude; each pixel gets an independent draw in
    /// `[-noise, noise]` per frame.
    pub noise: f64,
    /// Patch edge length used to derive the ground-truth dynamic mask.
    pub mask_patch: usize,
    #[serde(default)]
    pub start: (usize, usize),
    /// Background texture contrast in `[0, 1]`: 1 is full-range texture, 0 a
    /// flat mid-gray. Low values give the homogeneous backgrounds typical of
    /// mostly-static footage.
    #[serde(default = "default_contrast")]
    pub background_contrast: f64,
    /// Box-blur passes applied to both textures before rendering. 0 keeps the
    /// raw per-pixel noise; higher values give spatially smooth content whose
    /// similarity decays gradually with displacement, like real footage.
    #[serde(default)]
    pub texture_smoothing: usize,
}

fn default_contrast() -> f64 {
    1.0
}

impl SyntheticVideoSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.height == 0 || self.width == 0 {
            return Err(Error::InvalidSynthSpec("zero-sized clip".into()));
        }
        if self.object_size == 0 || self.object_size > self.width || self.object_size > self.height
        {
            return Err(Error::InvalidSynthSpec(format!(
                "object size {} does not fit a {}x{} frame",
                self.object_size, self.height, self.width
            )));
        }
        if self.start.0 + self.object_size > self.width
            || self.start.1 + self.object_size > self.height
        {
            return Err(Error::InvalidSynthSpec("object starts out of frame".into()));
        }
        if self.mask_patch == 0
            || self.height % self.mask_patch != 0
            || self.width % self.mask_patch != 0
        {
            return Err(Error::InvalidSynthSpec(format!(
                "mask patch {} must evenly divide {}x{}",
                self.mask_patch, self.height, self.width
            )));
        }
        if self.noise < 0.0 {
            return Err(Error::InvalidSynthSpec("negative noise amplitude".into()));
        }
        if !(0.0..=1.0).contains(&self.background_contrast) {
            return Err(Error::InvalidSynthSpec(
                "background contrast outside [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn mask_grid(&self) -> (usize, usize) {
        (self.height / self.mask_patch, self.width / self.mask_patch)
    }
}

/// In-place 3x3 box blur with clamped edges, repeated `passes` times.
fn box_blur(tex: &mut [f64], h: usize, w: usize, passes: usize) {
    let mut tmp = tex.to_vec();
    for _ in 0..passes {
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let mut sum = 0.0;
                    let mut count = 0.0;
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let ny = y as i64 + dy;
                            let nx = x as i64 + dx;
                            if ny >= 0 && ny < h as i64 && nx >= 0 && nx < w as i64 {
                                sum += tex[(ny as usize * w + nx as usize) * 3 + c];
                                count += 1.0;
                            }
                        }
                    }
                    tmp[(y * w + x) * 3 + c] = sum / count;
                }
            }
        }
        tex.copy_from_slice(&tmp);
    }
}

/// Affinely map a texture onto [0, 1].
fn normalize_range(tex: &mut [f64]) {
    let lo = tex.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tex.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        for v in tex.iter_mut() {
            *v = (*v - lo) / (hi - lo);
        }
    }
}

/// Reflect a coordinate into `[0, limit]` (triangle-wave fold).
fn reflect(v: f64, limit: f64) -> f64 {
    if limit <= 0.0 {
        return 0.0;
    }
    let period = 2.0 * limit;
    let mut m = v % period;
    if m < 0.0 {
        m += period;
    }
    if m > limit {
        period - m
    } else {
        m
    }
}

/// Object top-left corner at frame `t`.
fn object_position(spec: &SyntheticVideoSpec, t: usize) -> (usize, usize) {
    let max_x = (spec.width - spec.object_size) as f64;
    let max_y = (spec.height - spec.object_size) as f64;
    let tf = t as f64;
    let (raw_x, raw_y) = match spec.trajectory {
        Trajectory::Linear => (
            spec.start.0 as f64 + spec.velocity.0 * tf,
            spec.start.1 as f64 + spec.velocity.1 * tf,
        ),
        Trajectory::Sinusoidal => {
            let phase = 2.0 * std::f64::consts::PI * tf / spec.frames as f64;
            (
                spec.start.0 as f64 + spec.velocity.0 * tf,
                spec.start.1 as f64 + spec.velocity.1 * phase.sin(),
            )
        }
    };
    (
        reflect(raw_x, max_x).round() as usize,
        reflect(raw_y, max_y).round() as usize,
    )
}

/// Per-step dynamic patch masks, row-major over the mask grid. Entry `t`
/// describes the change between frames `t` and `t + 1`.
pub type StepMasks = Vec<Vec<bool>>;

/// Generate a clip and its ground-truth dynamic mask.
///
/// `seed` drives the noise; the background and object textures come from
/// `spec.texture_seed`, so corpora can share content while varying noise.
pub fn synth_generate(spec: &SyntheticVideoSpec, seed: u64) -> Result<(Video, StepMasks)> {
    spec.validate()?;
    let (h, w, size) = (spec.height, spec.width, spec.object_size);

    let mut tex_rng = ChaCha20Rng::seed_from_u64(spec.texture_seed);
    let mut background: Vec<f64> = (0..h * w * 3)
        .map(|_| tex_rng.gen_range(0.0..1.0))
        .collect();
    let mut object: Vec<f64> = (0..size * size * 3)
        .map(|_| tex_rng.gen_range(0.0..1.0))
        .collect();
    if spec.texture_smoothing > 0 {
        // Blur shrinks the value range; rescale so smoothing changes spatial
        // frequency, not contrast.
        box_blur(&mut background, h, w, spec.texture_smoothing);
        normalize_range(&mut background);
        box_blur(&mut object, size, size, spec.texture_smoothing);
        normalize_range(&mut object);
    }
    let contrast = spec.background_contrast;
    for v in &mut background {
        *v = 0.5 + contrast * (*v - 0.5);
    }

    let mut noise_rng = ChaCha20Rng::seed_from_u64(seed);
    let mut video = Video::zeros(spec.frames, h, w);
    for t in 0..spec.frames {
        let (ox, oy) = object_position(spec, t);
        for y in 0..h {
            for x in 0..w {
                let inside = x >= ox && x < ox + size && y >= oy && y < oy + size;
                for c in 0..3 {
                    let base = if inside {
                        object[((y - oy) * size + (x - ox)) * 3 + c]
                    } else {
                        background[(y * w + x) * 3 + c]
                    };
                    let n = if spec.noise > 0.0 {
                        noise_rng.gen_range(-spec.noise..=spec.noise)
                    } else {
                        0.0
                    };
                    video.set(t, y, x, c, base + n);
                }
            }
        }
    }

    let masks = derive_step_masks(&video, spec.mask_patch, 2.0 * spec.noise);
    Ok((video, masks))
}

/// Audit pixel diffs between consecutive frames: a patch is dynamic at step
/// `t` when any of its pixels moves by more than `threshold`.
pub fn derive_step_masks(video: &Video, patch: usize, threshold: f64) -> StepMasks {
    let gh = video.height / patch;
    let gw = video.width / patch;
    (0..video.frames.saturating_sub(1))
        .map(|t| {
            let mut mask = vec![false; gh * gw];
            for (gy, m_row) in mask.chunks_mut(gw).enumerate() {
                for (gx, m) in m_row.iter_mut().enumerate() {
                    'patch: for py in 0..patch {
                        for px in 0..patch {
                            let (y, x) = (gy * patch + py, gx * patch + px);
                            for c in 0..3 {
                                let d = (video.get(t + 1, y, x, c) - video.get(t, y, x, c)).abs();
                                if d > threshold {
                                    *m = true;
                                    break 'patch;
                                }
                            }
                        }
                    }
                }
            }
            mask
        })
        .collect()
}

/// Union of the per-step masks: a position is dynamic if it changes at any
/// step of the clip.
pub fn union_mask(masks: &StepMasks) -> Vec<bool> {
    if masks.is_empty() {
        return Vec::new();
    }
    let mut out = vec![false; masks[0].len()];
    for mask in masks {
        for (o, &m) in out.iter_mut().zip(mask) {
            *o |= m;
        }
    }
    out
}
