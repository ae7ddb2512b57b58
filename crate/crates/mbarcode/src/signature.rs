//! Text signature files:
//!
//! ```text
//! MBSIG 1 <clip_id> <N> <K_retained> <region_count> <low_motion:0|1>
//! <label> <N characters of 0/1>
//! ...
//! ```
//!
//! One barcode line per retained region, labels strictly increasing, LF line
//! endings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mbarcode_core::{ClipSignature, MotionBarcode, SourceId};

use crate::error::{self, Error, Result};

pub const EXTENSION: &str = "mbsig";

pub fn encode(sig: &ClipSignature) -> Result<String> {
    if sig.clip_id.is_empty() || sig.clip_id.chars().any(char::is_whitespace) {
        return Err(Error::Usage(format!(
            "clip id {:?} cannot be stored in a signature file",
            sig.clip_id
        )));
    }
    let mut out = format!(
        "MBSIG 1 {} {} {} {} {}\n",
        sig.clip_id,
        sig.frame_count,
        sig.barcodes.len(),
        sig.region_count,
        sig.low_motion as u8
    );
    for b in &sig.barcodes {
        let label = match b.source() {
            SourceId::Region(l) => l,
            SourceId::Pixel { .. } => {
                return Err(Error::Usage(
                    "signature barcodes must come from regions".into(),
                ))
            }
        };
        writeln!(out, "{label} {b}").unwrap();
    }
    Ok(out)
}

/// Parses a signature; `path` is only used in error messages.
pub fn decode(text: &str, path: &Path) -> Result<ClipSignature> {
    let bad = |line: usize, msg: String| Error::format(path, Some(line), msg);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| bad(1, "empty signature file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 7 || fields[0] != "MBSIG" {
        return Err(bad(
            1,
            "expected `MBSIG 1 <clip_id> <N> <K> <regions> <low_motion>`".into(),
        ));
    }
    if fields[1] != "1" {
        return Err(bad(
            1,
            format!("unsupported signature version {}", fields[1]),
        ));
    }
    let number = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| bad(1, format!("bad {what} {s:?}")))
    };
    let frame_count = number(fields[3], "frame count")?;
    let retained = number(fields[4], "barcode count")?;
    let region_count = number(fields[5], "region count")? as u32;
    let low_motion = match fields[6] {
        "0" => false,
        "1" => true,
        other => return Err(bad(1, format!("bad low-motion flag {other:?}"))),
    };
    let mut barcodes = Vec::with_capacity(retained);
    let mut previous: Option<u32> = None;
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (label, bits) = line
            .split_once(' ')
            .ok_or_else(|| bad(n, "expected `<label> <bits>`".into()))?;
        let label: u32 = label
            .parse()
            .map_err(|_| bad(n, format!("bad label {label:?}")))?;
        if previous.is_some_and(|p| label <= p) {
            return Err(bad(n, format!("label {label} is not increasing")));
        }
        if label >= region_count {
            return Err(bad(
                n,
                format!("label {label} exceeds region count {region_count}"),
            ));
        }
        if bits.len() != frame_count {
            return Err(bad(
                n,
                format!("barcode has {} bits, expected {frame_count}", bits.len()),
            ));
        }
        let barcode = MotionBarcode::from_bitstring(bits, SourceId::Region(label))
            .map_err(|e| bad(n, e.to_string()))?;
        barcodes.push(barcode);
        previous = Some(label);
    }
    if barcodes.len() != retained {
        return Err(bad(
            1,
            format!(
                "header declares {retained} barcodes, file has {}",
                barcodes.len()
            ),
        ));
    }
    Ok(ClipSignature {
        clip_id: fields[2].to_string(),
        frame_count,
        barcodes,
        region_count,
        low_motion,
    })
}

pub fn read(path: &Path) -> Result<ClipSignature> {
    decode(&error::read_to_string(path)?, path)
}

pub fn write(sig: &ClipSignature, path: &Path) -> Result<()> {
    error::write(path, encode(sig)?)
}

/// Every `*.mbsig` file directly inside `dir`, sorted by file name.
pub fn read_dir(dir: &Path) -> Result<Vec<ClipSignature>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == EXTENSION));
    paths.sort();
    paths.iter().map(|p| read(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ClipSignature {
        ClipSignature {
            clip_id: "walk_01".into(),
            frame_count: 6,
            barcodes: vec![
                MotionBarcode::from_bitstring("110000", SourceId::Region(2)).unwrap(),
                MotionBarcode::from_bitstring("011110", SourceId::Region(5)).unwrap(),
            ],
            region_count: 9,
            low_motion: true,
        }
    }

    #[test]
    fn exact_text() {
        assert_eq!(
            encode(&sample()).unwrap(),
            "MBSIG 1 walk_01 6 2 9 1\n2 110000\n5 011110\n"
        );
    }

    #[test]
    fn round_trip() {
        let sig = sample();
        assert_eq!(decode(&encode(&sig).unwrap(), Path::new("x")).unwrap(), sig);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let p = Path::new("s.mbsig");
        let cases = [
            ("MBSIG 1 a 4 1 3 0\n0 10x1\n", 2),
            ("MBSIG 1 a 4 2 3 0\n1 1010\n0 1010\n", 3),
            ("MBSIG 1 a 4 1 3 0\n0 101\n", 2),
            ("MBSIG 1 a 4 2 3 0\n0 1010\n", 1),
            ("MBSIG 2 a 4 0 3 0\n", 1),
            ("MBSIG 1 a 4 1 3 0\n7 1010\n", 2),
        ];
        for (text, line) in cases {
            match decode(text, p) {
                Err(Error::Format { line: Some(l), .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
