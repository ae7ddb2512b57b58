//! SLIC superpixels on the single-channel motion image.
//!
//! Intensities are the motion counts rescaled to `[0, 100]`. Clustering is
//! local k-means in `(intensity, x, y)` with distance
//! `D = sqrt(dc^2 + (ds / S)^2 * m^2)`; `S` is the grid spacing and `m` the
//! compactness. After the last iteration, 4-connected fragments smaller than a
//! quarter of the nominal region area are merged into their largest
//! neighbour, and labels are renumbered in raster order of first appearance.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::barcode::MotionImage;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SlicParams {
    pub target_regions: usize,
    pub compactness: f64,
    pub iterations: usize,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            target_regions: 1000,
            compactness: 10.0,
            iterations: 10,
        }
    }
}

/// A partition of the image into `region_count` labelled regions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperpixelLabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    region_count: u32,
}

impl SuperpixelLabelMap {
    /// Wraps raw labels. Every label in `[0, region_count)` must be used and
    /// no other label may appear; connectivity is not checked.
    pub fn new(width: usize, height: usize, labels: Vec<u32>, region_count: u32) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::FrameSize {
                frame: 0,
                expected: width * height,
                actual: labels.len(),
            });
        }
        let mut used = vec![false; region_count as usize];
        for &l in &labels {
            match used.get_mut(l as usize) {
                Some(u) => *u = true,
                None => {
                    return Err(Error::UnknownLabel {
                        label: l,
                        count: region_count,
                    })
                }
            }
        }
        if used.iter().any(|u| !u) {
            return Err(invalid("label map leaves a region empty"));
        }
        Ok(Self {
            width,
            height,
            labels,
            region_count,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn region_count(&self) -> u32 {
        self.region_count
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn region_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.region_count as usize];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }
}

#[derive(Clone, Copy, Debug)]
struct Center {
    x: f64,
    y: f64,
    intensity: f64,
}

const UNASSIGNED: u32 = u32::MAX;

pub fn slic_segment(image: &MotionImage, params: &SlicParams) -> Result<SuperpixelLabelMap> {
    let (width, height) = (image.width(), image.height());
    let pixels = width * height;
    let k = params.target_regions;
    if k == 0 {
        return Err(invalid("target_regions must be >= 1"));
    }
    if k > pixels {
        return Err(Error::TooManyRegions { regions: k, pixels });
    }
    if params.iterations == 0 {
        return Err(invalid("iterations must be >= 1"));
    }
    if !(params.compactness >= 0.0 && params.compactness.is_finite()) {
        return Err(invalid("compactness must be finite and >= 0"));
    }

    let scale = 100.0 / image.max_count().max(1) as f64;
    let intensity: Vec<f64> = image.counts().iter().map(|&c| c as f64 * scale).collect();

    let spacing = libm::round(libm::sqrt(pixels as f64 / k as f64)).max(1.0);
    let mut centers = initial_centers(&intensity, width, height, spacing);

    let weight = (params.compactness / spacing) * (params.compactness / spacing);
    let mut labels = vec![UNASSIGNED; pixels];
    let mut dist = vec![f64::INFINITY; pixels];
    for _ in 0..params.iterations {
        dist.fill(f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            let x0 = libm::ceil(c.x - spacing).max(0.0) as usize;
            let x1 = (libm::floor(c.x + spacing) as i64).min(width as i64 - 1);
            let y0 = libm::ceil(c.y - spacing).max(0.0) as usize;
            let y1 = (libm::floor(c.y + spacing) as i64).min(height as i64 - 1);
            if x1 < 0 || y1 < 0 {
                continue;
            }
            for y in y0..=y1 as usize {
                let dy = y as f64 - c.y;
                for x in x0..=x1 as usize {
                    let p = y * width + x;
                    let dx = x as f64 - c.x;
                    let dc = intensity[p] - c.intensity;
                    let d = dc * dc + (dx * dx + dy * dy) * weight;
                    if d < dist[p] {
                        dist[p] = d;
                        labels[p] = k as u32;
                    }
                }
            }
        }

        let mut sums = vec![(0.0f64, 0.0f64, 0.0f64, 0usize); centers.len()];
        for (p, &l) in labels.iter().enumerate() {
            if l == UNASSIGNED {
                continue;
            }
            let s = &mut sums[l as usize];
            s.0 += (p % width) as f64;
            s.1 += (p / width) as f64;
            s.2 += intensity[p];
            s.3 += 1;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s.3 > 0 {
                let n = s.3 as f64;
                *c = Center {
                    x: s.0 / n,
                    y: s.1 / n,
                    intensity: s.2 / n,
                };
            }
        }
    }

    let min_size = pixels as f64 / k as f64 / 4.0;
    let (labels, region_count) = enforce_connectivity(&labels, width, height, min_size);
    Ok(SuperpixelLabelMap {
        width,
        height,
        labels,
        region_count,
    })
}

fn gradient(intensity: &[f64], width: usize, height: usize, x: usize, y: usize) -> f64 {
    let at = |x: usize, y: usize| intensity[y * width + x];
    let gx = at((x + 1).min(width - 1), y) - at(x.saturating_sub(1), y);
    let gy = at(x, (y + 1).min(height - 1)) - at(x, y.saturating_sub(1));
    gx * gx + gy * gy
}

/// Centres on an even grid of roughly `spacing` pitch, each moved to the
/// lowest-gradient pixel of its 3x3 neighbourhood when that is strictly lower
/// than the gradient under the centre.
fn initial_centers(intensity: &[f64], width: usize, height: usize, spacing: f64) -> Vec<Center> {
    let nx = libm::round(width as f64 / spacing).max(1.0) as usize;
    let ny = libm::round(height as f64 / spacing).max(1.0) as usize;
    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let cx = (i as f64 + 0.5) * width as f64 / nx as f64 - 0.5;
            let cy = (j as f64 + 0.5) * height as f64 / ny as f64 - 0.5;
            let px = (libm::round(cx).max(0.0) as usize).min(width - 1);
            let py = (libm::round(cy).max(0.0) as usize).min(height - 1);
            let mut best = (px, py, gradient(intensity, width, height, px, py));
            for qy in py.saturating_sub(1)..=(py + 1).min(height - 1) {
                for qx in px.saturating_sub(1)..=(px + 1).min(width - 1) {
                    let g = gradient(intensity, width, height, qx, qy);
                    if g < best.2 {
                        best = (qx, qy, g);
                    }
                }
            }
            let (x, y) = if (best.0, best.1) == (px, py) {
                (cx, cy)
            } else {
                (best.0 as f64, best.1 as f64)
            };
            centers.push(Center {
                x,
                y,
                intensity: intensity[best.1 * width + best.0],
            });
        }
    }
    centers
}

fn find(parent: &mut [usize], mut c: usize) -> usize {
    while parent[c] != c {
        parent[c] = parent[parent[c]];
        c = parent[c];
    }
    c
}

/// Splits labels into 4-connected components, folds components smaller than
/// `min_size` into their largest neighbour (ties: lowest component index,
/// small components visited in raster order, repeated until none remain),
/// and renumbers the result in raster order.
fn enforce_connectivity(
    labels: &[u32],
    width: usize,
    height: usize,
    min_size: f64,
) -> (Vec<u32>, u32) {
    let pixels = width * height;
    let mut comp = vec![usize::MAX; pixels];
    let mut sizes: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..pixels {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let label = labels[start];
        comp[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(p) = queue.pop_front() {
            size += 1;
            let (x, y) = (p % width, p / width);
            let mut visit = |q: usize| {
                if comp[q] == usize::MAX && labels[q] == label {
                    comp[q] = id;
                    queue.push_back(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < width {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - width);
            }
            if y + 1 < height {
                visit(p + width);
            }
        }
        sizes.push(size);
    }

    let n = sizes.len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for p in 0..pixels {
        let (x, y) = (p % width, p / width);
        let a = comp[p];
        for q in [
            (x + 1 < width).then(|| p + 1),
            (y + 1 < height).then(|| p + width),
        ]
        .into_iter()
        .flatten()
        {
            let b = comp[q];
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
        adj.dedup();
    }

    let mut parent: Vec<usize> = (0..n).collect();
    let mut members: Vec<Vec<usize>> = (0..n).map(|c| vec![c]).collect();
    loop {
        let mut changed = false;
        for c in 0..n {
            if parent[c] != c || (sizes[c] as f64) >= min_size {
                continue;
            }
            let mut best: Option<usize> = None;
            for m in members[c].clone() {
                for &nb in &adjacency[m] {
                    let r = find(&mut parent, nb);
                    if r == c {
                        continue;
                    }
                    best = match best {
                        Some(b) if sizes[b] > sizes[r] || (sizes[b] == sizes[r] && b < r) => {
                            Some(b)
                        }
                        _ => Some(r),
                    };
                }
            }
            if let Some(target) = best {
                parent[c] = target;
                sizes[target] += sizes[c];
                let moved = core::mem::take(&mut members[c]);
                members[target].extend(moved);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut renumber = vec![u32::MAX; n];
    let mut next = 0u32;
    let mut out = vec![0u32; pixels];
    for p in 0..pixels {
        let r = find(&mut parent, comp[p]);
        if renumber[r] == u32::MAX {
            renumber[r] = next;
            next += 1;
        }
        out[p] = renumber[r];
    }
    (out, next)
}

/// True when every region of the map is a single 4-connected piece.
pub fn is_four_connected(map: &SuperpixelLabelMap) -> bool {
    let (_, count) = enforce_connectivity(map.labels(), map.width(), map.height(), 0.0);
    count == map.region_count()
}
