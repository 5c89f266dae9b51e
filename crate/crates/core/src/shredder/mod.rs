//! Synthetic puzzle generation and puzzle bundle storage.
//!
//! A source image is cut by `num_cuts` guided polylines that span the whole
//! image. Every opaque pixel is labelled by the side of each cut it falls on,
//! and each 4-connected region of equal labels becomes one fragment. Cuts
//! follow pixel cracks, so the partition leaves no cut-line pixels and the
//! groundtruth poses re-cover the source exactly.

mod bundle;
mod synth;

use std::collections::{BTreeMap, VecDeque};

use image::{Rgba, RgbaImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Fragment, OutlineParams, RigidTransform2D};

pub use bundle::{read_bundle, write_bundle, MANIFEST_FILE};
pub use synth::{add_pixel_noise, synthesize_image};

/// Smallest fragment the shredder will emit, in pixels.
pub const MIN_FRAGMENT_AREA: usize = 400;
/// Spacing between perturbed polyline vertices along a cut.
pub const CUT_VERTEX_SPACING: f64 = 40.0;
const MAX_CUT_RETRIES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShredParams {
    pub num_cuts: usize,
    /// Uniform jitter of each cut's direction, radians.
    pub orientation_jitter: f64,
    /// Uniform perpendicular displacement of cut vertices, pixels.
    pub perturbation_amplitude: f64,
}

impl Default for ShredParams {
    fn default() -> Self {
        Self {
            num_cuts: 4,
            orientation_jitter: 0.12,
            perturbation_amplitude: 8.0,
        }
    }
}

impl ShredParams {
    fn validate(&self) -> Result<()> {
        if self.num_cuts < 1 {
            return Err(Error::Parameter("num_cuts must be at least 1".into()));
        }
        if self.num_cuts > 64 {
            return Err(Error::Parameter("at most 64 cuts are supported".into()));
        }
        if !(self.orientation_jitter >= 0.0 && self.perturbation_amplitude >= 0.0) {
            return Err(Error::Parameter(
                "orientation_jitter and perturbation_amplitude must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Fragments with their groundtruth placement in the source frame.
#[derive(Clone, Debug)]
pub struct PuzzleBundle {
    pub fragments: Vec<Fragment>,
    /// Pose of each fragment (local frame to source frame), by id.
    pub groundtruth_poses: BTreeMap<usize, RigidTransform2D>,
    pub source_size: (u32, u32),
    pub seed: u64,
    pub params: ShredParams,
    pub outline: OutlineParams,
}

impl PuzzleBundle {
    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn fragment(&self, id: usize) -> &Fragment {
        &self.fragments[id]
    }

    /// Groundtruth pose of `j` relative to `i`: maps `j`'s local frame into
    /// `i`'s, so that `X_i * T = X_j`.
    pub fn relative_pose(&self, i: usize, j: usize) -> Option<RigidTransform2D> {
        let xi = self.groundtruth_poses.get(&i)?;
        let xj = self.groundtruth_poses.get(&j)?;
        Some(xi.inverse() * *xj)
    }

    pub fn canvas_diagonal(&self) -> f64 {
        let (w, h) = self.source_size;
        ((w as f64).powi(2) + (h as f64).powi(2)).sqrt()
    }

    /// Seam length in pixel edges for every pair of fragments that touch
    /// under the groundtruth poses.
    pub fn groundtruth_adjacency(&self) -> BTreeMap<(usize, usize), usize> {
        let (w, h) = self.source_size;
        let mut labels = vec![usize::MAX; (w * h) as usize];
        for f in &self.fragments {
            let Some(pose) = self.groundtruth_poses.get(&f.id) else {
                continue;
            };
            let inv = pose.inverse();
            for y in 0..h {
                for x in 0..w {
                    let p = nalgebra::Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
                    if f.covers(inv.apply(p)) {
                        labels[(y * w + x) as usize] = f.id;
                    }
                }
            }
        }
        let mut seams = BTreeMap::new();
        let mut bump = |a: usize, b: usize| {
            if a != b && a != usize::MAX && b != usize::MAX {
                *seams.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        };
        for y in 0..h {
            for x in 0..w {
                let l = labels[(y * w + x) as usize];
                if x + 1 < w {
                    bump(l, labels[(y * w + x + 1) as usize]);
                }
                if y + 1 < h {
                    bump(l, labels[((y + 1) * w + x) as usize]);
                }
            }
        }
        seams
    }
}

/// One cut: a polyline that is a function graph over the cut's own axis.
#[derive(Clone, Debug)]
struct Cut {
    origin: (f64, f64),
    dir: (f64, f64),
    /// Perpendicular offsets at `u = u0 + k * spacing`.
    u0: f64,
    offsets: Vec<f64>,
}

impl Cut {
    fn side(&self, x: f64, y: f64) -> bool {
        let dx = x - self.origin.0;
        let dy = y - self.origin.1;
        let u = dx * self.dir.0 + dy * self.dir.1;
        let v = -dx * self.dir.1 + dy * self.dir.0;
        let t = ((u - self.u0) / CUT_VERTEX_SPACING).max(0.0);
        let k = (t.floor() as usize).min(self.offsets.len() - 2);
        let f = (t - k as f64).min(1.0);
        let g = self.offsets[k] * (1.0 - f) + self.offsets[k + 1] * f;
        v > g
    }

    fn draw(
        rng: &mut ChaCha8Rng,
        index: usize,
        params: &ShredParams,
        size: (u32, u32),
    ) -> Self {
        let (w, h) = (size.0 as f64, size.1 as f64);
        let horizontal = index.is_multiple_of(2);
        // Cuts of each family are spread over evenly spaced strata.
        let family = if horizontal {
            params.num_cuts.div_ceil(2)
        } else {
            params.num_cuts / 2
        };
        let slot = index / 2;
        let extent = if horizontal { h } else { w };
        let stratum = extent / (family as f64 + 1.0);
        let pos = stratum * (slot as f64 + 1.0) + rng.gen_range(-0.25..0.25) * stratum;
        let along = if horizontal { w } else { h };
        let along_pos = rng.gen_range(0.3..0.7) * along;
        let jitter = if params.orientation_jitter > 0.0 {
            rng.gen_range(-params.orientation_jitter..=params.orientation_jitter)
        } else {
            0.0
        };
        let base = if horizontal {
            0.0
        } else {
            std::f64::consts::FRAC_PI_2
        };
        let angle = base + jitter;
        let origin = if horizontal {
            (along_pos, pos)
        } else {
            (pos, along_pos)
        };
        let half = (w * w + h * h).sqrt();
        let u0 = -half - CUT_VERTEX_SPACING;
        let count = ((2.0 * half + 2.0 * CUT_VERTEX_SPACING) / CUT_VERTEX_SPACING).ceil() as usize + 2;
        let amp = params.perturbation_amplitude;
        let offsets = (0..count)
            .map(|_| if amp > 0.0 { rng.gen_range(-amp..=amp) } else { 0.0 })
            .collect();
        Self {
            origin,
            dir: (angle.cos(), angle.sin()),
            u0,
            offsets,
        }
    }
}

/// Connected regions of equal cut signature; `None` for transparent pixels.
fn label_regions(image: &RgbaImage, cuts: &[Cut]) -> (Vec<Option<usize>>, Vec<usize>) {
    let (w, h) = image.dimensions();
    let sig: Vec<Option<u64>> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            if image.get_pixel(x, y)[3] == 0 {
                return None;
            }
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            Some(
                cuts.iter()
                    .enumerate()
                    .fold(0u64, |acc, (k, c)| acc | ((c.side(px, py) as u64) << k)),
            )
        })
        .collect();
    let mut labels = vec![None; sig.len()];
    let mut areas = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..sig.len() {
        if sig[start].is_none() || labels[start].is_some() {
            continue;
        }
        let id = areas.len();
        let mut area = 0;
        labels[start] = Some(id);
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            area += 1;
            let (x, y) = ((i as u32) % w, (i as u32) / w);
            let mut visit = |j: usize| {
                if labels[j].is_none() && sig[j] == sig[i] {
                    labels[j] = Some(id);
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w as usize);
            }
            if y + 1 < h {
                visit(i + w as usize);
            }
        }
        areas.push(area);
    }
    (labels, areas)
}

/// Cuts `image` into irregular fragments.
///
/// Cuts are drawn one at a time; a cut that would create a fragment smaller
/// than [`MIN_FRAGMENT_AREA`] is redrawn, up to 50 times.
pub fn shred(image: &RgbaImage, params: &ShredParams, seed: u64) -> Result<PuzzleBundle> {
    shred_with_outline(image, params, seed, &OutlineParams::default())
}

pub fn shred_with_outline(
    image: &RgbaImage,
    params: &ShredParams,
    seed: u64,
    outline: &OutlineParams,
) -> Result<PuzzleBundle> {
    params.validate()?;
    let (w, h) = image.dimensions();
    if w == 0 || h == 0 || !image.pixels().any(|p| p[3] > 0) {
        return Err(Error::InvalidInput("source image is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cuts: Vec<Cut> = Vec::with_capacity(params.num_cuts);
    let mut labelled = label_regions(image, &cuts);
    for index in 0..params.num_cuts {
        let mut accepted = false;
        for _ in 0..MAX_CUT_RETRIES {
            cuts.push(Cut::draw(&mut rng, index, params, (w, h)));
            let candidate = label_regions(image, &cuts);
            if candidate.1.iter().all(|&a| a >= MIN_FRAGMENT_AREA) {
                labelled = candidate;
                accepted = true;
                break;
            }
            cuts.pop();
        }
        if !accepted {
            return Err(Error::Parameter(format!(
                "cannot place cut {} of {} without a fragment below {MIN_FRAGMENT_AREA} px",
                index + 1,
                params.num_cuts
            )));
        }
    }
    let (labels, areas) = labelled;
    let n = areas.len();

    let mut bounds = vec![(u32::MAX, u32::MAX, 0u32, 0u32); n];
    for (i, l) in labels.iter().enumerate() {
        if let Some(id) = *l {
            let (x, y) = ((i as u32) % w, (i as u32) / w);
            let b = &mut bounds[id];
            b.0 = b.0.min(x);
            b.1 = b.1.min(y);
            b.2 = b.2.max(x);
            b.3 = b.3.max(y);
        }
    }
    let mut fragments = Vec::with_capacity(n);
    let mut groundtruth_poses = BTreeMap::new();
    for (id, &(x0, y0, x1, y1)) in bounds.iter().enumerate() {
        let raster = RgbaImage::from_fn(x1 - x0 + 1, y1 - y0 + 1, |x, y| {
            let (sx, sy) = (x + x0, y + y0);
            if labels[(sy * w + sx) as usize] == Some(id) {
                *image.get_pixel(sx, sy)
            } else {
                Rgba([0, 0, 0, 0])
            }
        });
        fragments.push(Fragment::new(id, raster, outline)?);
        groundtruth_poses.insert(id, RigidTransform2D::translation(x0 as f64, y0 as f64));
    }
    Ok(PuzzleBundle {
        fragments,
        groundtruth_poses,
        source_size: (w, h),
        seed,
        params: *params,
        outline: *outline,
    })
}

/// Adds cuts one at a time (same seed) until at least `target` fragments
/// result.
pub fn shred_to_count(
    image: &RgbaImage,
    target: usize,
    orientation_jitter: f64,
    perturbation_amplitude: f64,
    seed: u64,
) -> Result<PuzzleBundle> {
    let mut last_err = None;
    for num_cuts in 1..=64 {
        let params = ShredParams {
            num_cuts,
            orientation_jitter,
            perturbation_amplitude,
        };
        match shred(image, &params, seed) {
            Ok(b) if b.len() >= target => return Ok(b),
            Ok(_) => {}
            Err(e @ Error::Parameter(_)) => {
                last_err = Some(e);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::Parameter(format!("could not reach {target} fragments"))
    }))
}
