//! One representative barcode per superpixel, and the clip signature built
//! from them.
//!
//! The representative is the per-bit rounded mean of the region's pixel
//! barcodes (exact halves round up to motion). Per-bit majority minimises the
//! summed Hamming distance to the members.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::barcode::{
    check_fraction, compute_motion_image, has_enough_motion, MotionBarcode, SourceId,
};
use crate::error::{Error, Result};
use crate::sequence::MotionMaskSequence;
use crate::slic::{slic_segment, SlicParams, SuperpixelLabelMap};

/// A clip's pooled, filtered barcodes: the unit stored in a retrieval index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClipSignature {
    pub clip_id: String,
    pub frame_count: usize,
    /// Retained barcodes, sorted by source region label.
    pub barcodes: Vec<MotionBarcode>,
    /// Regions in the segmentation, before filtering.
    pub region_count: u32,
    /// Set when fewer than `min_barcodes` barcodes survived the motion filter.
    pub low_motion: bool,
}

impl ClipSignature {
    pub fn len(&self) -> usize {
        self.barcodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.barcodes.is_empty()
    }

    /// Keeps the first `len` frames of every barcode and re-applies the motion
    /// filter at the new length.
    pub fn truncated(&self, len: usize, min_motion_fraction: f64, min_barcodes: usize) -> Self {
        let barcodes: Vec<_> = self
            .barcodes
            .iter()
            .map(|b| b.truncated(len))
            .filter(|b| has_enough_motion(b, min_motion_fraction))
            .collect();
        Self {
            clip_id: self.clip_id.clone(),
            frame_count: len.min(self.frame_count),
            low_motion: barcodes.len() < min_barcodes,
            barcodes,
            region_count: self.region_count,
        }
    }
}

/// Everything needed to go from motion masks to a signature.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureParams {
    pub slic: SlicParams,
    pub min_motion_fraction: f64,
    pub min_barcodes: usize,
}

impl Default for SignatureParams {
    fn default() -> Self {
        Self {
            slic: SlicParams::default(),
            min_motion_fraction: 0.1,
            min_barcodes: 100,
        }
    }
}

fn check_dimensions(masks: &MotionMaskSequence, labelmap: &SuperpixelLabelMap) -> Result<()> {
    if masks.width() != labelmap.width() || masks.height() != labelmap.height() {
        return Err(Error::DimensionMismatch(
            masks.width(),
            masks.height(),
            labelmap.width(),
            labelmap.height(),
        ));
    }
    Ok(())
}

/// Per-region, per-frame counts of motion pixels, plus region sizes.
fn region_counts(
    masks: &MotionMaskSequence,
    labelmap: &SuperpixelLabelMap,
) -> (Vec<u32>, Vec<usize>) {
    let n = masks.frame_count();
    let mut counts = vec![0u32; labelmap.region_count() as usize * n];
    for (t, frame) in masks.frames().enumerate() {
        for (&m, &l) in frame.iter().zip(labelmap.labels()) {
            if m == 1 {
                counts[l as usize * n + t] += 1;
            }
        }
    }
    (counts, labelmap.region_sizes())
}

fn majority(counts: &[u32], size: usize, label: u32) -> MotionBarcode {
    MotionBarcode::from_bits(
        counts.iter().map(|&c| 2 * c as usize >= size),
        SourceId::Region(label),
    )
}

pub fn pool_superpixel(
    masks: &MotionMaskSequence,
    labelmap: &SuperpixelLabelMap,
    label: u32,
) -> Result<MotionBarcode> {
    check_dimensions(masks, labelmap)?;
    if label >= labelmap.region_count() {
        return Err(Error::UnknownLabel {
            label,
            count: labelmap.region_count(),
        });
    }
    let mut counts = vec![0u32; masks.frame_count()];
    let mut size = 0;
    for (p, &l) in labelmap.labels().iter().enumerate() {
        if l != label {
            continue;
        }
        size += 1;
        for (t, c) in counts.iter_mut().enumerate() {
            *c += masks.frame(t)[p] as u32;
        }
    }
    Ok(majority(&counts, size, label))
}

pub fn build_signature(
    masks: &MotionMaskSequence,
    labelmap: &SuperpixelLabelMap,
    min_motion_fraction: f64,
    min_barcodes: usize,
) -> Result<ClipSignature> {
    check_dimensions(masks, labelmap)?;
    check_fraction(min_motion_fraction)?;
    let n = masks.frame_count();
    let (counts, sizes) = region_counts(masks, labelmap);
    let barcodes: Vec<_> = (0..labelmap.region_count())
        .map(|label| {
            let l = label as usize;
            majority(&counts[l * n..(l + 1) * n], sizes[l], label)
        })
        .filter(|b| has_enough_motion(b, min_motion_fraction))
        .collect();
    Ok(ClipSignature {
        clip_id: String::from(masks.clip_id()),
        frame_count: n,
        low_motion: barcodes.len() < min_barcodes,
        barcodes,
        region_count: labelmap.region_count(),
    })
}

/// Motion image, SLIC segmentation and pooling in one call.
pub fn extract_signature(
    masks: &MotionMaskSequence,
    params: &SignatureParams,
) -> Result<(ClipSignature, SuperpixelLabelMap)> {
    let image = compute_motion_image(masks);
    let labelmap = slic_segment(&image, &params.slic)?;
    let signature = build_signature(
        masks,
        &labelmap,
        params.min_motion_fraction,
        params.min_barcodes,
    )?;
    Ok((signature, labelmap))
}
