//! Synthetic corpora on disk.
//!
//! ```text
//! <out>/masks/<clip_id>/<clip_id>.manifest   mask frames of every clip
//! <out>/frames/<clip_id>/<clip_id>.manifest  grayscale frames (optional)
//! <out>/clips.txt                            mask manifests, one per line
//! <out>/relevance.txt                        ground truth
//! <out>/scenes.txt                           the plan, see below
//! ```
//!
//! The plan file is line oriented; `#` lines are comments:
//!
//! ```text
//! scene <duration> <width> <height> <rng_seed>
//! actor <half_width> <half_height>
//! segment <start> <end> <from_x> <from_y> <to_x> <to_y>
//! clip <clip_id> <scene_index> <noise_p> <rng_seed>
//! transform <a> <b> <tx> <c> <d> <ty>
//! occluder <x> <y> <width> <height>
//! ```
//!
//! `actor` lines belong to the preceding `scene`, `segment` lines to the
//! preceding `actor`, `transform` and `occluder` lines to the preceding
//! `clip`. Scenes are numbered from 0 in file order. Reals are written in
//! shortest round-trip form, so a plan survives a write/read cycle exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mbarcode_core::synth::{Actor, CorpusClip, CorpusPlan, Rect, SceneSpec, Segment, ViewSpec};
use mbarcode_core::Relevance;

use crate::error::{self, Error, Result};
use crate::{relevance, video_io};

pub fn encode_plan(plan: &CorpusPlan) -> String {
    let mut out = String::from("# synthetic corpus plan\n");
    for scene in &plan.scenes {
        let (d, w, h, seed) = (scene.duration, scene.width, scene.height, scene.rng_seed);
        writeln!(out, "scene {d} {w} {h} {seed}").unwrap();
        for actor in &scene.actors {
            writeln!(
                out,
                "actor {} {}",
                actor.half_extent[0], actor.half_extent[1]
            )
            .unwrap();
            for s in &actor.segments {
                let ([fx, fy], [tx, ty]) = (s.from, s.to);
                writeln!(out, "segment {} {} {fx} {fy} {tx} {ty}", s.start, s.end).unwrap();
            }
        }
    }
    for clip in &plan.clips {
        let v = &clip.view;
        writeln!(
            out,
            "clip {} {} {} {}",
            clip.clip_id, clip.scene, v.noise_p, v.rng_seed
        )
        .unwrap();
        let [[a, b, tx], [c, d, ty]] = v.transform;
        writeln!(out, "transform {a} {b} {tx} {c} {d} {ty}").unwrap();
        for r in &v.occluders {
            writeln!(out, "occluder {} {} {} {}", r.x, r.y, r.width, r.height).unwrap();
        }
    }
    out
}

/// Relevance implied by a plan: every clip whose scene is seen from more
/// than one view is a query for the scene's other views.
pub fn plan_relevance(clips: &[CorpusClip]) -> Relevance {
    let mut by_scene: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for c in clips {
        by_scene.entry(c.scene).or_default().push(&c.clip_id);
    }
    let mut rel = Relevance::new();
    for c in clips {
        let views = &by_scene[&c.scene];
        if views.len() > 1 {
            rel.push(
                c.clip_id.clone(),
                views.iter().filter(|&&id| id != c.clip_id).copied(),
            );
        }
    }
    rel
}

pub fn decode_plan(text: &str, path: &Path) -> Result<CorpusPlan> {
    let mut scenes: Vec<SceneSpec> = Vec::new();
    let mut clips: Vec<CorpusClip> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let bad = |msg: &str| Error::format(path, Some(i + 1), msg);
        let mut fields = line.split_whitespace();
        let Some(kind) = fields.next().filter(|k| !k.starts_with('#')) else {
            continue;
        };
        let args: Vec<&str> = fields.collect();
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(bad(&format!(
                    "`{kind}` takes {n} fields, got {}",
                    args.len()
                )))
            }
        };
        let num = |k: usize| {
            args[k]
                .parse::<f64>()
                .map_err(|_| bad(&format!("bad number {:?}", args[k])))
        };
        let int = |k: usize| {
            args[k]
                .parse::<usize>()
                .map_err(|_| bad(&format!("bad integer {:?}", args[k])))
        };
        let seed = |k: usize| {
            args[k]
                .parse::<u64>()
                .map_err(|_| bad(&format!("bad seed {:?}", args[k])))
        };
        match kind {
            "scene" => {
                want(4)?;
                scenes.push(SceneSpec {
                    duration: int(0)?,
                    width: int(1)?,
                    height: int(2)?,
                    actors: Vec::new(),
                    rng_seed: seed(3)?,
                });
            }
            "actor" => {
                want(2)?;
                let scene = scenes
                    .last_mut()
                    .ok_or_else(|| bad("`actor` before any `scene`"))?;
                scene.actors.push(Actor {
                    half_extent: [num(0)?, num(1)?],
                    segments: Vec::new(),
                });
            }
            "segment" => {
                want(6)?;
                let actor = scenes
                    .last_mut()
                    .and_then(|s| s.actors.last_mut())
                    .ok_or_else(|| bad("`segment` before any `actor`"))?;
                actor.segments.push(Segment {
                    start: int(0)?,
                    end: int(1)?,
                    from: [num(2)?, num(3)?],
                    to: [num(4)?, num(5)?],
                });
            }
            "clip" => {
                want(4)?;
                clips.push(CorpusClip {
                    clip_id: args[0].to_string(),
                    scene: int(1)?,
                    view: ViewSpec {
                        transform: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
                        occluders: Vec::new(),
                        noise_p: num(2)?,
                        rng_seed: seed(3)?,
                    },
                });
            }
            "transform" => {
                want(6)?;
                let clip = clips
                    .last_mut()
                    .ok_or_else(|| bad("`transform` before any `clip`"))?;
                clip.view.transform = [[num(0)?, num(1)?, num(2)?], [num(3)?, num(4)?, num(5)?]];
            }
            "occluder" => {
                want(4)?;
                let clip = clips
                    .last_mut()
                    .ok_or_else(|| bad("`occluder` before any `clip`"))?;
                clip.view.occluders.push(Rect {
                    x: int(0)?,
                    y: int(1)?,
                    width: int(2)?,
                    height: int(3)?,
                });
            }
            other => return Err(bad(&format!("unknown record {other:?}"))),
        }
    }
    for scene in &scenes {
        scene.validate().map_err(|e| Error::pipeline(path, e))?;
    }
    for clip in &clips {
        if clip.scene >= scenes.len() {
            return Err(Error::format(
                path,
                None,
                format!(
                    "clip {} refers to missing scene {}",
                    clip.clip_id, clip.scene
                ),
            ));
        }
        clip.view.validate().map_err(|e| Error::pipeline(path, e))?;
    }
    let relevance = plan_relevance(&clips);
    Ok(CorpusPlan {
        scenes,
        clips,
        relevance,
    })
}

pub fn read_plan(path: &Path) -> Result<CorpusPlan> {
    decode_plan(&error::read_to_string(path)?, path)
}

/// Renders and writes every clip of `plan` under `out`, returning the mask
/// manifest paths in plan order.
pub fn write_corpus(plan: &CorpusPlan, out: &Path, with_frames: bool) -> Result<Vec<PathBuf>> {
    error::create_dir_all(out)?;
    let mut manifests = Vec::with_capacity(plan.clips.len());
    let mut listing = String::new();
    for clip in &plan.clips {
        log::debug!("rendering {}", clip.clip_id);
        let masks = plan.render(clip)?;
        let manifest =
            video_io::write_mask_sequence(&masks, &out.join("masks").join(&clip.clip_id))?;
        if with_frames {
            let frames = plan.render_frames(clip)?;
            video_io::write_frame_sequence(&frames, &out.join("frames").join(&clip.clip_id))?;
        }
        writeln!(listing, "masks/{0}/{0}.manifest", clip.clip_id).unwrap();
        manifests.push(manifest);
    }
    error::write(&out.join("clips.txt"), listing)?;
    relevance::write(&plan.relevance, &out.join("relevance.txt"))?;
    error::write(&out.join("scenes.txt"), encode_plan(plan))?;
    Ok(manifests)
}
