use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A clip of 8-bit grayscale frames, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameSequence {
    clip_id: String,
    width: usize,
    height: usize,
    frames: Vec<Vec<u8>>,
}

impl FrameSequence {
    pub fn new(
        clip_id: impl Into<String>,
        width: usize,
        height: usize,
        frames: Vec<Vec<u8>>,
    ) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::TooFewFrames(frames.len()));
        }
        let expected = width * height;
        for (frame, data) in frames.iter().enumerate() {
            if data.len() != expected {
                return Err(Error::FrameSize {
                    frame,
                    expected,
                    actual: data.len(),
                });
            }
        }
        Ok(Self {
            clip_id: clip_id.into(),
            width,
            height,
            frames,
        })
    }

    pub fn clip_id(&self) -> &str {
        &self.clip_id
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frame(&self, t: usize) -> &[u8] {
        &self.frames[t]
    }

    pub fn frames(&self) -> &[Vec<u8>] {
        &self.frames
    }
}

/// Binary motion masks, one per frame: `1` = motion, `0` = no motion.
///
/// Stored as a single frame-major buffer of `frame_count * width * height`
/// bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MotionMaskSequence {
    clip_id: String,
    width: usize,
    height: usize,
    frame_count: usize,
    data: Vec<u8>,
}

impl MotionMaskSequence {
    /// Builds a sequence from per-frame masks, rejecting any value other than
    /// 0 or 1.
    pub fn new(
        clip_id: impl Into<String>,
        width: usize,
        height: usize,
        masks: Vec<Vec<u8>>,
    ) -> Result<Self> {
        if masks.is_empty() {
            return Err(Error::EmptySequence);
        }
        let plane = width * height;
        let mut data = Vec::with_capacity(plane * masks.len());
        for (frame, mask) in masks.iter().enumerate() {
            if mask.len() != plane {
                return Err(Error::FrameSize {
                    frame,
                    expected: plane,
                    actual: mask.len(),
                });
            }
            if let Some(&value) = mask.iter().find(|&&v| v > 1) {
                return Err(Error::NonBinaryMask { frame, value });
            }
            data.extend_from_slice(mask);
        }
        Ok(Self {
            clip_id: clip_id.into(),
            width,
            height,
            frame_count: masks.len(),
            data,
        })
    }

    /// All-zero sequence.
    pub fn zeros(clip_id: impl Into<String>, width: usize, height: usize, frames: usize) -> Self {
        Self {
            clip_id: clip_id.into(),
            width,
            height,
            frame_count: frames,
            data: alloc::vec![0; width * height * frames],
        }
    }

    pub(crate) fn from_raw(
        clip_id: String,
        width: usize,
        height: usize,
        frame_count: usize,
        data: Vec<u8>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * frame_count);
        debug_assert!(data.iter().all(|&v| v <= 1));
        Self {
            clip_id,
            width,
            height,
            frame_count,
            data,
        }
    }

    pub fn clip_id(&self) -> &str {
        &self.clip_id
    }

    pub fn set_clip_id(&mut self, clip_id: impl Into<String>) {
        self.clip_id = clip_id.into();
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn frame(&self, t: usize) -> &[u8] {
        let plane = self.pixel_count();
        &self.data[t * plane..(t + 1) * plane]
    }

    pub(crate) fn frame_mut(&mut self, t: usize) -> &mut [u8] {
        let plane = self.pixel_count();
        &mut self.data[t * plane..(t + 1) * plane]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, t: usize) -> u8 {
        self.data[t * self.pixel_count() + y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, t: usize, motion: bool) {
        let plane = self.pixel_count();
        self.data[t * plane + y * self.width + x] = motion as u8;
    }

    /// Total number of motion bits over all frames.
    pub fn ones(&self) -> usize {
        self.data.iter().map(|&v| v as usize).sum()
    }

    pub fn frames(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks_exact(self.pixel_count().max(1))
    }
}
