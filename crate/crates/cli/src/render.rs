//! Compositing fragments at solved poses.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use image::{Rgba, RgbaImage};
use nalgebra::Vector2;
use reassembly::geometry::{Fragment, RigidTransform2D};

/// Space left between separately rendered components.
const GAP: f64 = 16.0;
/// Refuse to allocate canvases beyond this many pixels per side.
const MAX_SIDE: f64 = 16_384.0;
const SEAM: Rgba<u8> = Rgba([20, 20, 20, 255]);

fn bounds(frag: &Fragment, pose: &RigidTransform2D) -> (Vector2<f64>, Vector2<f64>) {
    let (w, h) = (frag.width() as f64, frag.height() as f64);
    let corners = [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)].map(|(x, y)| pose.apply(Vector2::new(x, y)));
    let lo = corners.iter().fold(Vector2::repeat(f64::INFINITY), |a, c| a.inf(c));
    let hi = corners.iter().fold(Vector2::repeat(f64::NEG_INFINITY), |a, c| a.sup(c));
    (lo, hi)
}

/// Draws every fragment at its pose, one component after another from left
/// to right (each component's poses live in their own frame). Later
/// fragments cover earlier ones where they overlap; the background stays
/// transparent.
pub fn composite(
    fragments: &[Fragment],
    poses: &BTreeMap<usize, RigidTransform2D>,
    components: &[Vec<usize>],
    seams: bool,
) -> Result<RgbaImage> {
    // Shift each component so that it starts right of the previous one.
    let mut placed: Vec<(usize, RigidTransform2D)> = Vec::new();
    let mut cursor = 0.0;
    let mut height: f64 = 0.0;
    for comp in components {
        let (mut lo, mut hi) = (Vector2::repeat(f64::INFINITY), Vector2::repeat(f64::NEG_INFINITY));
        for &v in comp {
            let (a, b) = bounds(&fragments[v], &poses[&v]);
            lo = lo.inf(&a);
            hi = hi.sup(&b);
        }
        let shift = RigidTransform2D::translation(cursor - lo.x, -lo.y);
        placed.extend(comp.iter().map(|&v| (v, shift * poses[&v])));
        cursor += hi.x - lo.x + GAP;
        height = height.max(hi.y - lo.y);
    }
    let width = (cursor - GAP).max(1.0).ceil();
    let height = height.max(1.0).ceil();
    if width > MAX_SIDE || height > MAX_SIDE {
        bail!(reassembly::Error::InvalidInput(format!(
            "rendered canvas would be {width}x{height} pixels"
        )));
    }
    let mut canvas = RgbaImage::new(width as u32, height as u32);
    placed.sort_by_key(|&(v, _)| v);
    for (v, pose) in &placed {
        let frag = &fragments[*v];
        let inv = pose.inverse();
        let (lo, hi) = bounds(frag, pose);
        let (x0, y0) = (lo.x.floor().max(0.0) as u32, lo.y.floor().max(0.0) as u32);
        let (x1, y1) = (
            (hi.x.ceil() as u32).min(canvas.width()),
            (hi.y.ceil() as u32).min(canvas.height()),
        );
        for y in y0..y1 {
            for x in x0..x1 {
                let q = inv.apply(Vector2::new(x as f64 + 0.5, y as f64 + 0.5));
                if q.x < 0.0 || q.y < 0.0 {
                    continue;
                }
                let (qx, qy) = (q.x as u32, q.y as u32);
                if qx < frag.width() && qy < frag.height() {
                    let px = *frag.raster.get_pixel(qx, qy);
                    if px[3] > 0 {
                        canvas.put_pixel(x, y, px);
                    }
                }
            }
        }
    }
    if seams {
        for (v, pose) in &placed {
            for p in fragments[*v].contour.points() {
                let c = pose.apply(*p);
                if c.x >= 0.0 && c.y >= 0.0 && (c.x as u32) < canvas.width() && (c.y as u32) < canvas.height() {
                    canvas.put_pixel(c.x as u32, c.y as u32, SEAM);
                }
            }
        }
    }
    Ok(canvas)
}
