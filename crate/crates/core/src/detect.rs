//! Motion detection: sample-based background subtraction, plus a plain
//! frame-difference fallback.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::rng::PixelRng;
use crate::sequence::{FrameSequence, MotionMaskSequence};

/// Parameters of the per-pixel sample background model.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundModelParams {
    /// Stored background samples per pixel.
    pub samples_per_pixel: u32,
    /// Largest absolute intensity difference at which a sample matches.
    pub match_radius: u8,
    /// Matching samples needed to call a pixel background.
    pub min_matches: u32,
    /// Expected number of frames between model refreshes of a pixel.
    pub subsample_factor: u32,
    pub rng_seed: u64,
}

impl Default for BackgroundModelParams {
    fn default() -> Self {
        Self {
            samples_per_pixel: 20,
            match_radius: 20,
            min_matches: 2,
            subsample_factor: 16,
            rng_seed: 0,
        }
    }
}

impl BackgroundModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_matches < 1 || self.samples_per_pixel < self.min_matches {
            return Err(invalid("need samples_per_pixel >= min_matches >= 1"));
        }
        if self.subsample_factor < 1 {
            return Err(invalid("subsample_factor must be >= 1"));
        }
        Ok(())
    }
}

/// In-bounds 8-neighbours of `(x, y)`, in raster order.
pub(crate) fn neighbours(x: usize, y: usize, width: usize, height: usize) -> ([usize; 8], usize) {
    let mut out = [0usize; 8];
    let mut n = 0;
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height {
                out[n] = ny as usize * width + nx as usize;
                n += 1;
            }
        }
    }
    (out, n)
}

/// Runs the sample-based background model over a clip.
///
/// The model is bootstrapped from frame 0, whose mask is therefore all zero:
/// every sample of pixel `(x, y)` is drawn from its in-bounds 8-neighbourhood
/// with the stream keyed `(seed, x, y, 0)`. For each later frame `t`, all
/// pixels are classified against the model as it stood after frame `t - 1`;
/// a pixel is background when at least `min_matches` samples lie within
/// `match_radius` of its value. Model refreshes are then applied in raster
/// order. A background pixel draws, from the stream keyed `(seed, x, y, t)`:
/// a self-update trial in `[0, subsample_factor)`, a sample slot, a
/// neighbour-update trial, a neighbour index and a neighbour sample slot. A
/// trial succeeds when it draws 0, and the chosen slot is overwritten with
/// the pixel's current value.
pub fn detect_motion(
    frames: &FrameSequence,
    params: &BackgroundModelParams,
) -> Result<MotionMaskSequence> {
    params.validate()?;
    let (width, height) = (frames.width(), frames.height());
    let plane = width * height;
    let n_samples = params.samples_per_pixel as usize;
    let radius = params.match_radius as i16;
    let seed = params.rng_seed;

    let first = frames.frame(0);
    let mut samples = vec![0u8; plane * n_samples];
    for y in 0..height {
        for x in 0..width {
            let p = y * width + x;
            let (nbrs, count) = neighbours(x, y, width, height);
            let mut rng = PixelRng::new(seed, x as u32, y as u32, 0);
            for s in &mut samples[p * n_samples..(p + 1) * n_samples] {
                *s = if count == 0 {
                    first[p]
                } else {
                    first[nbrs[rng.below(count as u32) as usize]]
                };
            }
        }
    }

    let mut data = vec![0u8; plane * frames.frame_count()];
    for t in 1..frames.frame_count() {
        let frame = frames.frame(t);
        let mask = &mut data[t * plane..(t + 1) * plane];
        for (p, m) in mask.iter_mut().enumerate() {
            let value = frame[p] as i16;
            let mut matches = 0;
            for &s in &samples[p * n_samples..(p + 1) * n_samples] {
                if (s as i16 - value).abs() <= radius {
                    matches += 1;
                    if matches >= params.min_matches {
                        break;
                    }
                }
            }
            *m = (matches < params.min_matches) as u8;
        }

        for y in 0..height {
            for x in 0..width {
                let p = y * width + x;
                if mask[p] == 1 {
                    continue;
                }
                let value = frame[p];
                let mut rng = PixelRng::new(seed, x as u32, y as u32, t as u32);
                let self_trial = rng.below(params.subsample_factor);
                let self_slot = rng.below(params.samples_per_pixel) as usize;
                let nbr_trial = rng.below(params.subsample_factor);
                let (nbrs, count) = neighbours(x, y, width, height);
                let nbr_pick = rng.below(count.max(1) as u32) as usize;
                let nbr_slot = rng.below(params.samples_per_pixel) as usize;
                if self_trial == 0 {
                    samples[p * n_samples + self_slot] = value;
                }
                if nbr_trial == 0 && count > 0 {
                    samples[nbrs[nbr_pick] * n_samples + nbr_slot] = value;
                }
            }
        }
    }

    Ok(MotionMaskSequence::from_raw(
        String::from(frames.clip_id()),
        width,
        height,
        frames.frame_count(),
        data,
    ))
}

/// Marks pixels whose intensity changed by more than `threshold` since the
/// previous frame. Frame 0 is all zero.
pub fn detect_motion_framediff(frames: &FrameSequence, threshold: u8) -> MotionMaskSequence {
    let plane = frames.width() * frames.height();
    let mut data: Vec<u8> = vec![0; plane * frames.frame_count()];
    for t in 1..frames.frame_count() {
        let (prev, cur) = (frames.frame(t - 1), frames.frame(t));
        for (p, m) in data[t * plane..(t + 1) * plane].iter_mut().enumerate() {
            *m = (prev[p].abs_diff(cur[p]) > threshold) as u8;
        }
    }
    MotionMaskSequence::from_raw(
        String::from(frames.clip_id()),
        frames.width(),
        frames.height(),
        frames.frame_count(),
        data,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(w: usize, h: usize, n: usize, v: u8) -> FrameSequence {
        FrameSequence::new("c", w, h, vec![vec![v; w * h]; n]).unwrap()
    }

    #[test]
    fn constant_video_has_no_motion() {
        let frames = constant(9, 7, 12, 93);
        let masks = detect_motion(&frames, &BackgroundModelParams::default()).unwrap();
        assert_eq!(masks.ones(), 0);
        assert_eq!(detect_motion_framediff(&frames, 0).ones(), 0);
    }

    #[test]
    fn framediff_marks_single_change() {
        let mut second = vec![0u8; 16];
        second[5] = 255;
        let frames = FrameSequence::new("f", 4, 4, vec![vec![0; 16], second]).unwrap();
        let masks = detect_motion_framediff(&frames, 10);
        assert_eq!(masks.frame(0).iter().filter(|&&v| v == 1).count(), 0);
        assert_eq!(masks.frame(1).iter().filter(|&&v| v == 1).count(), 1);
        assert_eq!(masks.get(1, 1, 1), 1);
    }

    #[test]
    fn framediff_unreachable_threshold() {
        let frames =
            FrameSequence::new("f", 2, 1, vec![vec![0, 255], vec![255, 0], vec![0, 255]]).unwrap();
        assert_eq!(detect_motion_framediff(&frames, 255).ones(), 0);
    }

    #[test]
    fn rejects_bad_params() {
        let frames = constant(3, 3, 2, 0);
        let p = BackgroundModelParams {
            min_matches: 0,
            ..Default::default()
        };
        assert!(detect_motion(&frames, &p).is_err());
        let p = BackgroundModelParams {
            samples_per_pixel: 1,
            min_matches: 2,
            ..Default::default()
        };
        assert!(detect_motion(&frames, &p).is_err());
    }

    #[test]
    fn first_frame_is_background() {
        let frames =
            FrameSequence::new("f", 2, 2, vec![vec![0, 50, 100, 200], vec![0; 4]]).unwrap();
        let masks = detect_motion(&frames, &BackgroundModelParams::default()).unwrap();
        assert!(masks.frame(0).iter().all(|&v| v == 0));
    }

    #[test]
    fn neighbours_at_corner() {
        let (n, count) = neighbours(0, 0, 3, 3);
        assert_eq!(&n[..count], &[1, 3, 4]);
        let (_, count) = neighbours(1, 1, 3, 3);
        assert_eq!(count, 8);
        let (_, count) = neighbours(0, 0, 1, 1);
        assert_eq!(count, 0);
    }
}
