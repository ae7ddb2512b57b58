//! Frame and mask sequences on disk: a text manifest listing one PGM per
//! line, in time order. Relative paths resolve against the manifest's
//! directory; blank lines are skipped.

use std::path::{Path, PathBuf};

use mbarcode_core::{FrameSequence, MotionMaskSequence};

use crate::error::{self, Error, Result};
use crate::pgm::{self, GrayImage};

/// `(line number, resolved path)` for every entry of a manifest.
pub fn read_manifest(path: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let text = error::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, base.join(l.trim())))
        .collect())
}

fn clip_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Width, height and `(manifest line, image)` pairs.
type LoadedImages = (usize, usize, Vec<(usize, GrayImage)>);

/// Loads every listed image, checking that they share one size.
fn load_images(manifest: &Path) -> Result<LoadedImages> {
    let mut dims = None;
    let mut images = Vec::new();
    for (line, path) in read_manifest(manifest)? {
        let img = pgm::read(&path).map_err(|e| match e {
            Error::Format { message, .. } => Error::format(
                manifest,
                Some(line),
                format!("{}: {message}", path.display()),
            ),
            Error::Io { source, .. } => Error::format(
                manifest,
                Some(line),
                format!("{}: {source}", path.display()),
            ),
            other => other,
        })?;
        let (w, h) = *dims.get_or_insert((img.width, img.height));
        if (img.width, img.height) != (w, h) {
            return Err(Error::format(
                manifest,
                Some(line),
                format!(
                    "{} is {}x{}, expected {w}x{h}",
                    path.display(),
                    img.width,
                    img.height
                ),
            ));
        }
        images.push((line, img));
    }
    let (w, h) = dims.unwrap_or((0, 0));
    Ok((w, h, images))
}

pub fn load_frame_sequence(manifest: &Path) -> Result<FrameSequence> {
    let (w, h, images) = load_images(manifest)?;
    let frames = images.into_iter().map(|(_, img)| img.pixels).collect();
    FrameSequence::new(clip_id_of(manifest), w, h, frames).map_err(|e| Error::pipeline(manifest, e))
}

/// Loads a mask sequence; pixels must be 0 (no motion) or 255 (motion).
pub fn load_mask_sequence(manifest: &Path) -> Result<MotionMaskSequence> {
    let (w, h, images) = load_images(manifest)?;
    let mut masks = Vec::with_capacity(images.len());
    for (t, (line, img)) in images.into_iter().enumerate() {
        if let Some(&value) = img.pixels.iter().find(|&&v| v != 0 && v != 255) {
            return Err(Error::format(
                manifest,
                Some(line),
                format!("non-binary mask value {value} in frame {t}"),
            ));
        }
        masks.push(img.pixels.into_iter().map(|v| (v == 255) as u8).collect());
    }
    if masks.is_empty() {
        return Err(Error::pipeline(
            manifest,
            mbarcode_core::Error::EmptySequence,
        ));
    }
    MotionMaskSequence::new(clip_id_of(manifest), w, h, masks)
        .map_err(|e| Error::pipeline(manifest, e))
}

fn manifest_name(clip_id: &str) -> Result<String> {
    if clip_id.is_empty()
        || clip_id.contains(['/', '\\'])
        || clip_id.chars().any(char::is_whitespace)
    {
        return Err(Error::Usage(format!(
            "clip id {clip_id:?} cannot name a manifest file"
        )));
    }
    Ok(format!("{clip_id}.manifest"))
}

fn write_frames<'a>(
    dir: &Path,
    clip_id: &str,
    width: usize,
    height: usize,
    frames: impl Iterator<Item = std::borrow::Cow<'a, [u8]>>,
) -> Result<PathBuf> {
    let manifest_path = dir.join(manifest_name(clip_id)?);
    error::create_dir_all(dir)?;
    let mut manifest = String::new();
    for (t, frame) in frames.enumerate() {
        let name = format!("frame_{t:06}.pgm");
        pgm::write(&dir.join(&name), width, height, &frame)?;
        manifest.push_str(&name);
        manifest.push('\n');
    }
    error::write(&manifest_path, manifest)?;
    Ok(manifest_path)
}

/// Writes `frame_%06d.pgm` files (0/255) and `<clip_id>.manifest` into
/// `dir`, returning the manifest path.
pub fn write_mask_sequence(masks: &MotionMaskSequence, dir: &Path) -> Result<PathBuf> {
    let frames = masks
        .frames()
        .map(|f| f.iter().map(|&v| v * 255).collect::<Vec<u8>>().into());
    write_frames(dir, masks.clip_id(), masks.width(), masks.height(), frames)
}

/// Same layout as [`write_mask_sequence`], with grayscale frames.
pub fn write_frame_sequence(frames: &FrameSequence, dir: &Path) -> Result<PathBuf> {
    write_frames(
        dir,
        frames.clip_id(),
        frames.width(),
        frames.height(),
        frames.frames().iter().map(|f| f.as_slice().into()),
    )
}
