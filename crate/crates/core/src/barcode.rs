//! Per-pixel motion barcodes, the motion image, and the informativeness
//! filters applied before matching.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Error, Result};
use crate::sequence::MotionMaskSequence;

/// Where a barcode came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceId {
    Pixel { x: u32, y: u32 },
    Region(u32),
}

/// An N-bit record of motion existence over time.
///
/// Bits are packed into `u64` words, least-significant bit first; bits past
/// `len` in the last word are always zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MotionBarcode {
    words: Vec<u64>,
    len: usize,
    ones: usize,
    source: SourceId,
}

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl MotionBarcode {
    pub fn from_bits<I>(bits: I, source: SourceId) -> Self
    where
        I: IntoIterator<Item = bool>,
    {
        let mut words = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if bit {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        Self::from_words(words, len, source)
    }

    /// Builds a barcode from packed words. Bits past `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize, source: SourceId) -> Self {
        words.resize(word_count(len), 0);
        if len % 64 != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        let ones = words.iter().map(|w| w.count_ones() as usize).sum();
        Self {
            words,
            len,
            ones,
            source,
        }
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bitstring(s: &str, source: SourceId) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(invalid(alloc::format!(
                        "invalid barcode character {other:?}"
                    )))
                }
            }
        }
        Ok(Self::from_bits(bits, source))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ones_count(&self) -> usize {
        self.ones
    }

    pub fn source(&self) -> SourceId {
        self.source
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, t: usize) -> bool {
        assert!(
            t < self.len,
            "bit {t} out of range for barcode of length {}",
            self.len
        );
        self.words[t / 64] >> (t % 64) & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |t| self.get(t))
    }

    /// Number of frames where both barcodes record motion.
    #[inline(always)]
    pub fn and_count(&self, other: &MotionBarcode) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn hamming(&self, other: &MotionBarcode) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Prefix of the first `len` frames.
    pub fn truncated(&self, len: usize) -> MotionBarcode {
        let len = len.min(self.len);
        Self::from_words(self.words[..word_count(len)].to_vec(), len, self.source)
    }
}

impl fmt::Display for MotionBarcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Per-pixel count of motion frames.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MotionImage {
    width: usize,
    height: usize,
    frame_count: usize,
    counts: Vec<u32>,
}

impl MotionImage {
    /// Wraps raw counts; every count must be at most `frame_count`.
    pub fn new(width: usize, height: usize, frame_count: usize, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != width * height {
            return Err(Error::FrameSize {
                frame: 0,
                expected: width * height,
                actual: counts.len(),
            });
        }
        if counts.iter().any(|&c| c as usize > frame_count) {
            return Err(invalid("motion count exceeds frame count"));
        }
        Ok(Self {
            width,
            height,
            frame_count,
            counts,
        })
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

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.counts[y * self.width + x]
    }

    pub fn max_count(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

pub fn compute_motion_image(masks: &MotionMaskSequence) -> MotionImage {
    let mut counts = alloc::vec![0u32; masks.pixel_count()];
    for frame in masks.frames() {
        for (c, &m) in counts.iter_mut().zip(frame) {
            *c += m as u32;
        }
    }
    MotionImage {
        width: masks.width(),
        height: masks.height(),
        frame_count: masks.frame_count(),
        counts,
    }
}

pub fn barcode_at(masks: &MotionMaskSequence, x: usize, y: usize) -> Result<MotionBarcode> {
    if x >= masks.width() || y >= masks.height() {
        return Err(Error::OutOfBounds {
            x,
            y,
            width: masks.width(),
            height: masks.height(),
        });
    }
    Ok(MotionBarcode::from_bits(
        (0..masks.frame_count()).map(|t| masks.get(x, y, t) == 1),
        SourceId::Pixel {
            x: x as u32,
            y: y as u32,
        },
    ))
}

/// True when a barcode has strictly more than `min_motion_fraction * N` ones.
#[inline]
pub fn has_enough_motion(barcode: &MotionBarcode, min_motion_fraction: f64) -> bool {
    barcode.ones_count() as f64 > min_motion_fraction * barcode.len() as f64
}

/// Keeps the barcodes with more than `min_motion_fraction` of their frames in
/// motion, in input order.
pub fn filter_barcodes(
    barcodes: Vec<MotionBarcode>,
    min_motion_fraction: f64,
) -> Result<Vec<MotionBarcode>> {
    check_fraction(min_motion_fraction)?;
    Ok(barcodes
        .into_iter()
        .filter(|b| has_enough_motion(b, min_motion_fraction))
        .collect())
}

pub(crate) fn check_fraction(min_motion_fraction: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&min_motion_fraction) {
        return Err(invalid(alloc::format!(
            "min_motion_fraction must lie in [0, 1], got {min_motion_fraction}"
        )));
    }
    Ok(())
}

pub fn sufficient_motion(signature_size: usize, min_barcodes: usize) -> bool {
    signature_size >= min_barcodes
}
