//! Synthetic multi-view scenes with known correspondence.
//!
//! A scene is a set of box-shaped actors moving through a 2D world, each
//! following a timeline of move and pause segments. A view maps the world onto
//! the image plane with an affine transform. A pixel reports motion at frame
//! `t` when its centre, mapped back into the world, lies inside an actor that
//! is moving at `t`. Motion timing is therefore the same in every view of a
//! scene, while position, orientation and scale differ.
//!
//! World coordinates live in the unit disc; generated views map that disc
//! inside the canvas.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::retrieval::Relevance;
use crate::rng::PixelRng;
use crate::sequence::{FrameSequence, MotionMaskSequence};

pub type Point = [f64; 2];

/// A stretch of an actor's timeline, frames `start..end`. The actor moves
/// linearly from `from` to `to`; if the two coincide it is paused.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub from: Point,
    pub to: Point,
}

impl Segment {
    pub fn is_move(&self) -> bool {
        self.from != self.to
    }

    fn position(&self, t: usize) -> Point {
        let s = (t - self.start) as f64 / (self.end - self.start) as f64;
        [
            self.from[0] + (self.to[0] - self.from[0]) * s,
            self.from[1] + (self.to[1] - self.from[1]) * s,
        ]
    }
}

/// An axis-aligned world box, `2 * half_extent` wide.
#[derive(Clone, Debug, PartialEq)]
pub struct Actor {
    pub half_extent: [f64; 2],
    /// Contiguous, covering frames `0..duration`.
    pub segments: Vec<Segment>,
}

impl Actor {
    fn segment_at(&self, t: usize) -> &Segment {
        let i = self.segments.partition_point(|s| s.end <= t);
        &self.segments[i]
    }

    /// Box centre at frame `t` and whether the actor is moving then.
    pub fn state(&self, t: usize) -> (Point, bool) {
        let seg = self.segment_at(t);
        (seg.position(t), seg.is_move())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub duration: usize,
    pub width: usize,
    pub height: usize,
    pub actors: Vec<Actor>,
    pub rng_seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.duration < 2 {
            return Err(invalid(format!(
                "scene duration must be at least 2, got {}",
                self.duration
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(invalid("scene canvas must be non-empty"));
        }
        if self.actors.is_empty() {
            return Err(invalid("scene needs at least one actor"));
        }
        for (i, actor) in self.actors.iter().enumerate() {
            if !actor.half_extent.iter().all(|&h| h.is_finite() && h > 0.0) {
                return Err(invalid(format!("actor {i} has a non-positive extent")));
            }
            let mut next = 0;
            for seg in &actor.segments {
                if seg.start != next || seg.end <= seg.start {
                    return Err(invalid(format!(
                        "actor {i} timeline has a gap or empty segment at frame {next}"
                    )));
                }
                if !seg.from.iter().chain(&seg.to).all(|v| v.is_finite()) {
                    return Err(invalid(format!("actor {i} has a non-finite waypoint")));
                }
                next = seg.end;
            }
            if next != self.duration {
                return Err(invalid(format!(
                    "actor {i} timeline covers {next} of {} frames",
                    self.duration
                )));
            }
        }
        Ok(())
    }
}

/// Pixel rectangle `x..x + width`, `y..y + height`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x - self.x < self.width && y >= self.y && y - self.y < self.height
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViewSpec {
    /// World to image: `[[a, b, tx], [c, d, ty]]`. Pixel `(x, y)` has its
    /// centre at `(x + 0.5, y + 0.5)`.
    pub transform: [[f64; 3]; 2],
    /// Motion is suppressed inside these.
    pub occluders: Vec<Rect>,
    /// Probability of flipping each mask bit.
    pub noise_p: f64,
    pub rng_seed: u64,
}

impl ViewSpec {
    pub fn validate(&self) -> Result<()> {
        let det = self.determinant();
        if !det.is_finite() || det == 0.0 || !self.transform.iter().flatten().all(|v| v.is_finite())
        {
            return Err(Error::DegenerateTransform(det));
        }
        if !(0.0..0.5).contains(&self.noise_p) {
            return Err(invalid(format!(
                "noise_p must be in [0, 0.5), got {}",
                self.noise_p
            )));
        }
        Ok(())
    }

    fn determinant(&self) -> f64 {
        let [[a, b, _], [c, d, _]] = self.transform;
        a * d - b * c
    }

    fn apply(&self, p: Point) -> Point {
        let [[a, b, tx], [c, d, ty]] = self.transform;
        [a * p[0] + b * p[1] + tx, c * p[0] + d * p[1] + ty]
    }

    fn inverse(&self) -> ViewSpec {
        let [[a, b, tx], [c, d, ty]] = self.transform;
        let det = self.determinant();
        let (ia, ib, ic, id) = (d / det, -b / det, -c / det, a / det);
        ViewSpec {
            transform: [
                [ia, ib, -(ia * tx + ib * ty)],
                [ic, id, -(ic * tx + id * ty)],
            ],
            occluders: Vec::new(),
            noise_p: 0.0,
            rng_seed: 0,
        }
    }
}

/// Calls `cover(pixel_index)` for every pixel whose centre maps into the box.
fn rasterize_box(
    view: &ViewSpec,
    inverse: &ViewSpec,
    width: usize,
    height: usize,
    centre: Point,
    half: [f64; 2],
    mut cover: impl FnMut(usize),
) {
    let corners = [[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]]
        .map(|[sx, sy]| view.apply([centre[0] + sx * half[0], centre[1] + sy * half[1]]));
    let lo = |i: usize| corners.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min);
    let hi = |i: usize| {
        corners
            .iter()
            .map(|c| c[i])
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let span = |lo: f64, hi: f64, size: usize| {
        let first = libm::floor(lo - 0.5).max(0.0) as usize;
        let last = (libm::ceil(hi - 0.5).max(-1.0) + 1.0).min(size as f64) as usize;
        first..last
    };
    for y in span(lo(1), hi(1), height) {
        for x in span(lo(0), hi(0), width) {
            let w = inverse.apply([x as f64 + 0.5, y as f64 + 0.5]);
            if libm::fabs(w[0] - centre[0]) <= half[0] && libm::fabs(w[1] - centre[1]) <= half[1] {
                cover(y * width + x);
            }
        }
    }
}

/// Motion masks of `scene` as seen through `view`. The clip id is left empty.
pub fn render_view(scene: &SceneSpec, view: &ViewSpec) -> Result<MotionMaskSequence> {
    scene.validate()?;
    view.validate()?;
    let (w, h, n) = (scene.width, scene.height, scene.duration);
    let inverse = view.inverse();
    let occluded: Vec<bool> = (0..w * h)
        .map(|p| view.occluders.iter().any(|r| r.contains(p % w, p / w)))
        .collect();
    let mut masks = MotionMaskSequence::zeros(String::new(), w, h, n);
    for t in 0..n {
        let frame = masks.frame_mut(t);
        for actor in &scene.actors {
            let (centre, moving) = actor.state(t);
            if moving {
                rasterize_box(view, &inverse, w, h, centre, actor.half_extent, |p| {
                    frame[p] = !occluded[p] as u8;
                });
            }
        }
        if view.noise_p > 0.0 {
            for (p, v) in frame.iter_mut().enumerate() {
                let mut rng =
                    PixelRng::new(view.rng_seed, (p % w) as u32, (p / w) as u32, t as u32);
                if rng.unit() < view.noise_p {
                    *v ^= 1;
                }
            }
        }
    }
    Ok(masks)
}

/// Grayscale frames of `scene` through `view`: every actor, moving or not, is
/// drawn as a bright box over a static textured background. Occluders are
/// drawn as flat mid-gray patches in front of the actors.
pub fn render_frames(clip_id: &str, scene: &SceneSpec, view: &ViewSpec) -> Result<FrameSequence> {
    scene.validate()?;
    view.validate()?;
    let (w, h) = (scene.width, scene.height);
    let inverse = view.inverse();
    let background: Vec<u8> = (0..w * h)
        .map(|p| {
            let (x, y) = ((p % w) / 4, (p / w) / 4);
            20 + PixelRng::new(scene.rng_seed, x as u32, y as u32, 0).below(60) as u8
        })
        .collect();
    let frames = (0..scene.duration)
        .map(|t| {
            let mut frame = background.clone();
            for (i, actor) in scene.actors.iter().enumerate() {
                let shade = 255 - (i % 4) as u8 * 20;
                let (centre, _) = actor.state(t);
                rasterize_box(view, &inverse, w, h, centre, actor.half_extent, |p| {
                    frame[p] = shade
                });
            }
            for r in &view.occluders {
                for y in r.y..(r.y + r.height).min(h) {
                    for x in r.x..(r.x + r.width).min(w) {
                        frame[y * w + x] = 128;
                    }
                }
            }
            frame
        })
        .collect();
    FrameSequence::new(clip_id, w, h, frames)
}

/// Knobs of the random scene generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneParams {
    pub duration: usize,
    pub width: usize,
    pub height: usize,
    pub min_actors: usize,
    pub max_actors: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            duration: 200,
            width: 128,
            height: 96,
            min_actors: 2,
            max_actors: 4,
        }
    }
}

/// Waypoints stay within this radius so boxes never leave the unit disc.
const PATH_RADIUS: f64 = 0.6;
const MIN_HALF_EXTENT: f64 = 0.18;
const MAX_HALF_EXTENT: f64 = 0.32;
const MIN_STEP: f64 = 0.04;
const MAX_STEP: f64 = 0.15;
const MOVE_FRAMES: core::ops::Range<usize> = 4..12;
const PAUSE_FRAMES: core::ops::Range<usize> = 3..10;

fn random_point(rng: &mut ChaCha8Rng) -> Point {
    let r = PATH_RADIUS * libm::sqrt(rng.random::<f64>());
    let a = rng.random_range(0.0..core::f64::consts::TAU);
    [r * libm::cos(a), r * libm::sin(a)]
}

/// A nearby waypoint, short enough that the box sweeps over much of its own
/// footprint during the move.
fn random_step(rng: &mut ChaCha8Rng, from: Point) -> Point {
    loop {
        let d = rng.random_range(MIN_STEP..MAX_STEP);
        let a = rng.random_range(0.0..core::f64::consts::TAU);
        let to = [from[0] + d * libm::cos(a), from[1] + d * libm::sin(a)];
        if libm::hypot(to[0], to[1]) <= PATH_RADIUS {
            return to;
        }
    }
}

fn random_actor(rng: &mut ChaCha8Rng, duration: usize) -> Actor {
    let half_extent = [
        rng.random_range(MIN_HALF_EXTENT..MAX_HALF_EXTENT),
        rng.random_range(MIN_HALF_EXTENT..MAX_HALF_EXTENT),
    ];
    let mut segments = Vec::new();
    let mut at = random_point(rng);
    let mut moving = rng.random_bool(0.5);
    let mut start = 0;
    while start < duration {
        let len = if moving {
            rng.random_range(MOVE_FRAMES)
        } else {
            rng.random_range(PAUSE_FRAMES)
        };
        let end = (start + len).min(duration);
        let to = if moving { random_step(rng, at) } else { at };
        segments.push(Segment {
            start,
            end,
            from: at,
            to,
        });
        at = to;
        start = end;
        moving = !moving;
    }
    Actor {
        half_extent,
        segments,
    }
}

/// A random scene; the same seed always gives the same scene.
pub fn random_scene(params: &SceneParams, seed: u64) -> Result<SceneSpec> {
    if params.min_actors == 0 || params.max_actors < params.min_actors {
        return Err(invalid("actor range must satisfy 1 <= min <= max"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(params.min_actors..=params.max_actors);
    let scene = SceneSpec {
        duration: params.duration,
        width: params.width,
        height: params.height,
        actors: (0..count)
            .map(|_| random_actor(&mut rng, params.duration))
            .collect(),
        rng_seed: seed,
    };
    scene.validate()?;
    Ok(scene)
}

/// Knobs of the random view generator.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewParams {
    pub noise_p: f64,
    /// Area fraction of the single occluder placed in each view; 0 for none.
    pub occluder_fraction: f64,
}

impl Default for ViewParams {
    fn default() -> Self {
        Self {
            noise_p: 0.0,
            occluder_fraction: 0.0,
        }
    }
}

fn random_view(
    rng: &mut ChaCha8Rng,
    angle_deg: f64,
    width: usize,
    height: usize,
    params: &ViewParams,
) -> ViewSpec {
    let side = width.min(height) as f64;
    let scale = 0.42 * side * rng.random_range(0.85..1.0);
    let (sx, sy) = (
        scale * rng.random_range(0.85..1.0),
        scale * rng.random_range(0.85..1.0),
    );
    let (sin, cos) = libm::sincos(angle_deg.to_radians());
    let shift = 0.03 * side;
    let tx = width as f64 / 2.0 + rng.random_range(-shift..shift);
    let ty = height as f64 / 2.0 + rng.random_range(-shift..shift);
    // Rotation times a positive diagonal scale: the rotational part of the
    // polar decomposition is exactly `angle_deg`.
    let transform = [[cos * sx, -sin * sy, tx], [sin * sx, cos * sy, ty]];
    let mut occluders = Vec::new();
    if params.occluder_fraction > 0.0 {
        let budget =
            params.occluder_fraction * rng.random_range(0.5..=1.0) * (width * height) as f64;
        let ow = ((width as f64 * rng.random_range(0.25..0.6)) as usize).max(1);
        let oh = ((budget / ow as f64) as usize).min(height);
        if oh > 0 {
            occluders.push(Rect {
                x: rng.random_range(0..=width - ow),
                y: rng.random_range(0..=height - oh),
                width: ow,
                height: oh,
            });
        }
    }
    ViewSpec {
        transform,
        occluders,
        noise_p: params.noise_p,
        rng_seed: rng.random(),
    }
}

/// Rotation angle of each view in degrees.
fn view_angles(rng: &mut ChaCha8Rng, views: usize) -> Vec<f64> {
    let step = 360.0 / views as f64;
    let slack = (step - 45.0) / 2.0;
    let base = rng.random_range(0.0..360.0);
    (0..views)
        .map(|k| {
            let jitter = if slack > 0.0 {
                rng.random_range(-slack..=slack)
            } else {
                0.0
            };
            base + k as f64 * step + jitter
        })
        .collect()
}

/// `views` random views of one scene whose rotations differ pairwise by at
/// least 45 degrees. Between 2 and 8 views.
pub fn random_views(
    width: usize,
    height: usize,
    views: usize,
    params: &ViewParams,
    seed: u64,
) -> Result<Vec<ViewSpec>> {
    if !(2..=8).contains(&views) {
        return Err(invalid(format!(
            "views per scene must be in 2..=8, got {views}"
        )));
    }
    check_view_params(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles = view_angles(&mut rng, views);
    Ok(angles
        .into_iter()
        .map(|a| random_view(&mut rng, a, width, height, params))
        .collect())
}

fn check_view_params(params: &ViewParams) -> Result<()> {
    if !(0.0..0.5).contains(&params.noise_p) {
        return Err(invalid(format!(
            "noise_p must be in [0, 0.5), got {}",
            params.noise_p
        )));
    }
    if !(0.0..=1.0).contains(&params.occluder_fraction) {
        return Err(invalid(format!(
            "occluder fraction must be in [0, 1], got {}",
            params.occluder_fraction
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusParams {
    pub scenes: usize,
    pub views_per_scene: usize,
    pub distractors: usize,
    pub scene: SceneParams,
    pub view: ViewParams,
    pub seed: u64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            scenes: 20,
            views_per_scene: 2,
            distractors: 20,
            scene: SceneParams::default(),
            view: ViewParams::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusClip {
    pub clip_id: String,
    /// Index into [`CorpusPlan::scenes`].
    pub scene: usize,
    pub view: ViewSpec,
}

/// Everything needed to render a corpus, plus its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusPlan {
    pub scenes: Vec<SceneSpec>,
    pub clips: Vec<CorpusClip>,
    /// One line per multi-view clip, listing the other views of its scene.
    pub relevance: Relevance,
}

impl CorpusPlan {
    pub fn render(&self, clip: &CorpusClip) -> Result<MotionMaskSequence> {
        let mut masks = render_view(&self.scenes[clip.scene], &clip.view)?;
        masks.set_clip_id(clip.clip_id.clone());
        Ok(masks)
    }

    pub fn render_frames(&self, clip: &CorpusClip) -> Result<FrameSequence> {
        render_frames(&clip.clip_id, &self.scenes[clip.scene], &clip.view)
    }
}

/// Scenes `sNNN` seen from several views (`sNNN_vK`) and single-view
/// distractors `dNNN` drawn from the same generator.
pub fn plan_corpus(params: &CorpusParams) -> Result<CorpusPlan> {
    if params.scenes == 0 {
        return Err(invalid("corpus needs at least one scene"));
    }
    if params.views_per_scene < 2 {
        return Err(invalid(format!(
            "views per scene must be at least 2, got {}",
            params.views_per_scene
        )));
    }
    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    let (w, h) = (params.scene.width, params.scene.height);
    let mut plan = CorpusPlan {
        scenes: Vec::new(),
        clips: Vec::new(),
        relevance: Relevance::new(),
    };
    for s in 0..params.scenes {
        let scene = random_scene(&params.scene, master.random())?;
        let views = random_views(w, h, params.views_per_scene, &params.view, master.random())?;
        let ids: Vec<String> = (0..views.len()).map(|v| format!("s{s:03}_v{v}")).collect();
        for (v, view) in views.into_iter().enumerate() {
            plan.clips.push(CorpusClip {
                clip_id: ids[v].clone(),
                scene: plan.scenes.len(),
                view,
            });
            let others = ids
                .iter()
                .enumerate()
                .filter(|&(o, _)| o != v)
                .map(|(_, id)| id.clone());
            plan.relevance.push(ids[v].clone(), others);
        }
        plan.scenes.push(scene);
    }
    check_view_params(&params.view)?;
    for d in 0..params.distractors {
        let scene = random_scene(&params.scene, master.random())?;
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        let angle = rng.random_range(0.0..360.0);
        let view = random_view(&mut rng, angle, w, h, &params.view);
        plan.clips.push(CorpusClip {
            clip_id: format!("d{d:03}"),
            scene: plan.scenes.len(),
            view,
        });
        plan.scenes.push(scene);
    }
    Ok(plan)
}

/// Rotation angle of a view's linear part, in degrees in `(-180, 180]`.
pub fn rotation_degrees(view: &ViewSpec) -> f64 {
    // For R * diag(sx, sy) with positive sx, the first column is sx * (cos, sin).
    let [[a, _, _], [c, _, _]] = view.transform;
    libm::atan2(c, a).to_degrees()
}

/// The frames during which `actor` moves, as a 0/1 vector.
pub fn ground_truth_timing(actor: &Actor, duration: usize) -> Vec<bool> {
    let mut bits = vec![false; duration];
    for seg in actor.segments.iter().filter(|s| s.is_move()) {
        for b in &mut bits[seg.start..seg.end.min(duration)] {
            *b = true;
        }
    }
    bits
}
