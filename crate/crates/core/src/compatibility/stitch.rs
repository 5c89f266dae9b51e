use image::{Rgba, RgbaImage};
use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::geometry::{Fragment, PointGrid, RigidTransform2D};

/// Longest side of the normalised stitching canvas.
pub const CANVAS_MAX_SIDE: f64 = 320.0;
/// Pixels of the two masks closer than this (canvas pixels) form the seam.
pub const SEAM_REACH: i64 = 3;
/// Dilation of the seam bounding box.
pub const ROI_DILATION: i64 = 8;

pub const OWNER_A: u8 = 1;
pub const OWNER_B: u8 = 2;

/// Boundary-level contact measurements taken from the contours rather than
/// the canvas, in source pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ContactStats {
    /// Contour points of `a` with a point of `b` within 3 px.
    pub near: usize,
    /// Of those, points whose outward normals oppose (dot < -0.5).
    pub opposed: usize,
    pub mean_normal_dot: f64,
    pub perimeter_a: f64,
    pub perimeter_b: f64,
}

/// Two fragments composited under a candidate transform.
#[derive(Clone, Debug)]
pub struct StitchSample {
    /// Composite; where both fragments are opaque `a` is drawn.
    pub image: RgbaImage,
    /// Per-pixel owner bits (`OWNER_A`, `OWNER_B`), row-major.
    pub owner: Vec<u8>,
    /// Colour of `b` at pixels owned by both, row-major (zero elsewhere).
    pub under: Vec<[u8; 3]>,
    /// Seam box `[x, y, w, h]` in canvas pixels.
    pub roi: [u32; 4],
    /// Canvas pixels per source pixel.
    pub scale: f64,
    pub contact: ContactStats,
    pub label: Option<bool>,
    pub weight: f64,
}

impl StitchSample {
    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }

    #[inline]
    pub fn owner_at(&self, x: i64, y: i64) -> u8 {
        if x < 0 || y < 0 || x >= self.width() as i64 || y >= self.height() as i64 {
            return 0;
        }
        self.owner[(y as u32 * self.width() + x as u32) as usize]
    }

    /// Colour of fragment `which` (`OWNER_A` or `OWNER_B`) at a pixel it owns.
    #[inline]
    pub fn color_of(&self, x: i64, y: i64, which: u8) -> [f64; 3] {
        let idx = (y as u32 * self.width() + x as u32) as usize;
        let c = if which == OWNER_B && self.owner[idx] == OWNER_A | OWNER_B {
            self.under[idx]
        } else {
            let p = self.image.get_pixel(x as u32, y as u32);
            [p[0], p[1], p[2]]
        };
        [c[0] as f64, c[1] as f64, c[2] as f64]
    }
}

fn pixel_rgb(f: &Fragment, p: Vector2<f64>) -> Option<[u8; 3]> {
    if f.covers(p) {
        let px = f.raster.get_pixel(p.x as u32, p.y as u32);
        Some([px[0], px[1], px[2]])
    } else {
        None
    }
}

fn contact_stats(a: &Fragment, b: &Fragment, t: &RigidTransform2D) -> ContactStats {
    let moved: Vec<Vector2<f64>> = b.contour.points().iter().map(|p| t.apply(*p)).collect();
    let grid = PointGrid::new(&moved, 3.0);
    let (mut near, mut opposed, mut dot_sum) = (0usize, 0usize, 0.0);
    for (ia, p) in a.contour.points().iter().enumerate() {
        if let Some((ib, _)) = grid.nearest(p, 3.0) {
            let d = a.normals[ia].dot(&t.rotate(b.normals[ib]));
            near += 1;
            dot_sum += d;
            if d < -0.5 {
                opposed += 1;
            }
        }
    }
    ContactStats {
        near,
        opposed,
        mean_normal_dot: if near > 0 { dot_sum / near as f64 } else { 0.0 },
        perimeter_a: a.contour.perimeter(),
        perimeter_b: b.contour.perimeter(),
    }
}

/// Composite `a` (in its own frame) and `b` placed by `t` onto a canvas
/// whose longer side is `CANVAS_MAX_SIDE`, and locate the seam.
///
/// The seam box covers every pixel of one fragment lying within
/// `SEAM_REACH` canvas pixels of the other, dilated by `ROI_DILATION` and
/// clipped to the canvas.
pub fn stitch_render(a: &Fragment, b: &Fragment, t: &RigidTransform2D) -> Result<StitchSample> {
    if !t.is_finite() {
        return Err(Error::InvalidInput("stitching transform is not finite".into()));
    }
    let (wb, hb) = (b.width() as f64, b.height() as f64);
    let mut lo = Vector2::new(0.0f64, 0.0);
    let mut hi = Vector2::new(a.width() as f64, a.height() as f64);
    for c in [
        Vector2::new(0.0, 0.0),
        Vector2::new(wb, 0.0),
        Vector2::new(0.0, hb),
        Vector2::new(wb, hb),
    ] {
        let q = t.apply(c);
        lo = lo.inf(&q);
        hi = hi.sup(&q);
    }
    let span = hi - lo;
    let scale = CANVAS_MAX_SIDE / span.x.max(span.y);
    let w = ((span.x * scale).ceil() as u32).clamp(1, CANVAS_MAX_SIDE as u32);
    let h = ((span.y * scale).ceil() as u32).clamp(1, CANVAS_MAX_SIDE as u32);

    let inv = t.inverse();
    let mut image = RgbaImage::new(w, h);
    let mut owner = vec![0u8; (w * h) as usize];
    let mut under = vec![[0u8; 3]; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let p = lo + Vector2::new(x as f64 + 0.5, y as f64 + 0.5) / scale;
            let ca = pixel_rgb(a, p);
            let cb = pixel_rgb(b, inv.apply(p));
            let idx = (y * w + x) as usize;
            match (ca, cb) {
                (Some(c), other) => {
                    image.put_pixel(x, y, Rgba([c[0], c[1], c[2], 255]));
                    owner[idx] = OWNER_A;
                    if let Some(cb) = other {
                        owner[idx] |= OWNER_B;
                        under[idx] = cb;
                    }
                }
                (None, Some(c)) => {
                    image.put_pixel(x, y, Rgba([c[0], c[1], c[2], 255]));
                    owner[idx] = OWNER_B;
                }
                (None, None) => {}
            }
        }
    }

    let mut sample = StitchSample {
        image,
        owner,
        under,
        roi: [0; 4],
        scale,
        contact: contact_stats(a, b, t),
        label: None,
        weight: 1.0,
    };
    let (mut x0, mut y0, mut x1, mut y1) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
    for (x, y) in seam_pixels(&sample) {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        return Err(Error::NoSeam);
    }
    let x0 = (x0 - ROI_DILATION).max(0);
    let y0 = (y0 - ROI_DILATION).max(0);
    let x1 = (x1 + ROI_DILATION).min(w as i64 - 1);
    let y1 = (y1 + ROI_DILATION).min(h as i64 - 1);
    sample.roi = [
        x0 as u32,
        y0 as u32,
        (x1 - x0 + 1) as u32,
        (y1 - y0 + 1) as u32,
    ];
    Ok(sample)
}

/// Offsets within `SEAM_REACH`, nearest first (ties in scan order).
pub(crate) fn reach_offsets() -> Vec<(i64, i64)> {
    let r = SEAM_REACH;
    let mut offs: Vec<(i64, i64)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| (dx, dy) != (0, 0) && dx * dx + dy * dy <= r * r)
        .collect();
    offs.sort_by_key(|&(dx, dy)| dx * dx + dy * dy);
    offs
}

/// Pixels owned by exactly one fragment with a pixel of the other within
/// `SEAM_REACH`, plus every pixel owned by both.
fn seam_pixels(s: &StitchSample) -> Vec<(i64, i64)> {
    let offs = reach_offsets();
    let mut out = Vec::new();
    for y in 0..s.height() as i64 {
        for x in 0..s.width() as i64 {
            let o = s.owner_at(x, y);
            if o == 0 {
                continue;
            }
            if o == OWNER_A | OWNER_B {
                out.push((x, y));
                continue;
            }
            let other = o ^ (OWNER_A | OWNER_B);
            if offs.iter().any(|&(dx, dy)| s.owner_at(x + dx, y + dy) & other != 0) {
                out.push((x, y));
            }
        }
    }
    out
}
