//! Raw RGB frame clips.

use crate::error::{Error, Result};

/// A clip of raw frames, row-major `[frames][height][width][3]`, values in
/// arbitrary real units (the synthetic generator emits roughly `[0, 1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Video {
    pub fn zeros(frames: usize, height: usize, width: usize) -> Self {
        Video {
            frames,
            height,
            width,
            data: vec![0.0; frames * height * width * 3],
        }
    }

    pub fn from_data(frames: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != frames * height * width * 3 {
            return Err(Error::DimensionMismatch(format!(
                "video payload has {} values, expected {}",
                data.len(),
                frames * height * width * 3
            )));
        }
        Ok(Video {
            frames,
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn index(&self, t: usize, y: usize, x: usize, c: usize) -> usize {
        ((t * self.height + y) * self.width + x) * 3 + c
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(t, y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, t: usize, y: usize, x: usize, c: usize, v: f64) {
        let i = self.index(t, y, x, c);
        self.data[i] = v;
    }
}
