//! Model geometry configuration for the divided space-time encoder.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Geometry of the video transformer: clip shape, tokenization, and
/// encoder depth/width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Clip length in frames (T).
    pub frames: usize,
    /// Frame height in pixels (H).
    pub height: usize,
    /// Frame width in pixels (W).
    pub width: usize,
    /// Spatial patch side in pixels (P).
    pub patch: usize,
    /// Tubelet length: frames per temporal token (t).
    pub tubelet: usize,
    /// Embedding dimension (C).
    pub channels: usize,
    /// Number of encoder layers (L).
    pub layers: usize,
    /// Number of attention heads.
    pub heads: usize,
    /// Whether a CLS token is prepended for global readout.
    pub cls_enabled: bool,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0
            || self.height == 0
            || self.width == 0
            || self.patch == 0
            || self.tubelet == 0
            || self.channels == 0
            || self.layers == 0
            || self.heads == 0
        {
            return Err(Error::InvalidConfig(
                "all dimensions must be positive".into(),
            ));
        }
        if self.height % self.patch != 0 {
            return Err(Error::InvalidConfig("H not divisible by P".into()));
        }
        if self.width % self.patch != 0 {
            return Err(Error::InvalidConfig("W not divisible by P".into()));
        }
        if self.frames % self.tubelet != 0 {
            return Err(Error::InvalidConfig("T not divisible by tubelet".into()));
        }
        if self.channels % self.heads != 0 {
            return Err(Error::InvalidConfig("C not divisible by heads".into()));
        }
        Ok(())
    }

    /// Spatial grid height in patches.
    pub fn grid_height(&self) -> usize {
        self.height / self.patch
    }

    /// Spatial grid width in patches.
    pub fn grid_width(&self) -> usize {
        self.width / self.patch
    }

    /// Spatial tokens per frame, N_s.
    pub fn spatial_tokens(&self) -> usize {
        self.grid_height() * self.grid_width()
    }

    /// Temporal tokens, N_t.
    pub fn temporal_tokens(&self) -> usize {
        self.frames / self.tubelet
    }

    /// Per-head channel count.
    pub fn head_dim(&self) -> usize {
        self.channels / self.heads
    }
}
