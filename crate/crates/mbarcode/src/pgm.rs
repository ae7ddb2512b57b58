//! Binary 8-bit PGM (`P5`, maxval 255).

use std::path::Path;

use crate::error::{self, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// Skips whitespace and `#` comments (which run to the end of the line).
fn skip_blank(data: &[u8], mut at: usize) -> usize {
    while at < data.len() {
        match data[at] {
            b'#' => {
                while at < data.len() && data[at] != b'\n' {
                    at += 1;
                }
            }
            c if c.is_ascii_whitespace() => at += 1,
            _ => break,
        }
    }
    at
}

fn header_number(data: &[u8], at: &mut usize, what: &str) -> std::result::Result<usize, String> {
    *at = skip_blank(data, *at);
    let start = *at;
    while *at < data.len() && data[*at].is_ascii_digit() {
        *at += 1;
    }
    std::str::from_utf8(&data[start..*at])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| format!("bad PGM header: missing {what}"))
}

/// Decodes one image. Bytes after the raster are ignored.
pub fn decode(data: &[u8]) -> std::result::Result<GrayImage, String> {
    if !data.starts_with(b"P5") {
        return Err("not a binary PGM (expected magic P5)".into());
    }
    let mut at = 2;
    let width = header_number(data, &mut at, "width")?;
    let height = header_number(data, &mut at, "height")?;
    let maxval = header_number(data, &mut at, "maxval")?;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval} (expected 255)"));
    }
    if width == 0 || height == 0 {
        return Err(format!("empty image {width}x{height}"));
    }
    match data.get(at) {
        Some(c) if c.is_ascii_whitespace() => at += 1,
        _ => return Err("bad PGM header: no whitespace before raster".into()),
    }
    let len = width * height;
    let pixels = data
        .get(at..at + len)
        .ok_or_else(|| format!("truncated raster: {} of {len} bytes", data.len() - at))?
        .to_vec();
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(
        pixels.len(),
        width * height,
        "raster size does not match dimensions"
    );
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn read(path: &Path) -> Result<GrayImage> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&data).map_err(|m| Error::format(path, None, m))
}

pub fn write(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    error::write(path, encode(width, height, pixels))
}
