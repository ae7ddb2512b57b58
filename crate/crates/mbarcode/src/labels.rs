//! Superpixel label map export.
//!
//! The raw format is exact: an 8-byte header (width, height as `u32` little
//! endian) followed by one `u32` LE label per pixel in raster order. The PGM
//! export hashes labels to 8 bits and is only meant for looking at.

use std::path::Path;

use mbarcode_core::SuperpixelLabelMap;

use crate::error::{self, Error, Result};
use crate::pgm;

pub fn encode_raw(map: &SuperpixelLabelMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * map.labels().len());
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    for &l in map.labels() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

pub fn decode_raw(data: &[u8]) -> std::result::Result<SuperpixelLabelMap, String> {
    let word = |i: usize| u32::from_le_bytes(data[i..i + 4].try_into().unwrap());
    if data.len() < 8 {
        return Err("label file shorter than its header".into());
    }
    let (w, h) = (word(0) as usize, word(4) as usize);
    if data.len() != 8 + 4 * w * h {
        return Err(format!(
            "label file holds {} bytes, expected {}",
            data.len(),
            8 + 4 * w * h
        ));
    }
    let labels: Vec<u32> = (0..w * h).map(|p| word(8 + 4 * p)).collect();
    let count = labels.iter().max().map_or(0, |&m| m + 1);
    SuperpixelLabelMap::new(w, h, labels, count).map_err(|e| e.to_string())
}

pub fn write_raw(map: &SuperpixelLabelMap, path: &Path) -> Result<()> {
    error::write(path, encode_raw(map))
}

pub fn read_raw(path: &Path) -> Result<SuperpixelLabelMap> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_raw(&data).map_err(|m| Error::format(path, None, m))
}

fn hash_label(label: u32) -> u8 {
    (label.wrapping_mul(2_654_435_761) >> 24) as u8
}

pub fn write_pgm(map: &SuperpixelLabelMap, path: &Path) -> Result<()> {
    let pixels: Vec<u8> = map.labels().iter().map(|&l| hash_label(l)).collect();
    pgm::write(path, map.width(), map.height(), &pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_round_trip() {
        let map = SuperpixelLabelMap::new(3, 2, vec![0, 0, 1, 2, 2, 1], 3).unwrap();
        let data = encode_raw(&map);
        assert_eq!(&data[..8], &[3, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(decode_raw(&data).unwrap(), map);
        assert!(decode_raw(&data[..10]).is_err());
    }
}
