use std::collections::HashMap;

use nalgebra::Vector2;

use super::fragment::Fragment;
use super::transform::RigidTransform2D;

/// Canvas scale used for intersection tests.
pub const DEFAULT_CANVAS_SCALE: f64 = 0.5;

/// Largest overlap (in canvas pixels at `scale`) that still counts as two
/// fragments merely abutting along a seam.
pub fn seam_tolerance(area_a: usize, area_b: usize, scale: f64) -> f64 {
    let smaller = area_a.min(area_b) as f64;
    (0.002 * smaller).max(30.0) * scale * scale
}

#[derive(Clone, Copy, Debug)]
struct CanvasBox {
    x0: i64,
    y0: i64,
    x1: i64,
    y1: i64,
}

impl CanvasBox {
    fn of(frag: &Fragment, pose: &RigidTransform2D, scale: f64) -> Self {
        let (w, h) = (frag.width() as f64, frag.height() as f64);
        let corners = [
            Vector2::new(0.0, 0.0),
            Vector2::new(w, 0.0),
            Vector2::new(0.0, h),
            Vector2::new(w, h),
        ]
        .map(|c| pose.apply(c) * scale);
        let min_x = corners.iter().map(|c| c.x).fold(f64::INFINITY, f64::min);
        let min_y = corners.iter().map(|c| c.y).fold(f64::INFINITY, f64::min);
        let max_x = corners.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max);
        let max_y = corners.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max);
        Self {
            x0: min_x.floor() as i64,
            y0: min_y.floor() as i64,
            x1: max_x.ceil() as i64,
            y1: max_y.ceil() as i64,
        }
    }

    fn intersect(&self, o: &Self) -> Option<Self> {
        let b = Self {
            x0: self.x0.max(o.x0),
            y0: self.y0.max(o.y0),
            x1: self.x1.min(o.x1),
            y1: self.y1.min(o.y1),
        };
        (b.x0 < b.x1 && b.y0 < b.y1).then_some(b)
    }
}

/// Samples a fragment placed at `pose` at the centre of canvas pixel `(cx, cy)`.
#[inline]
fn covers_canvas(frag: &Fragment, inv: &RigidTransform2D, cx: i64, cy: i64, scale: f64) -> bool {
    let world = Vector2::new((cx as f64 + 0.5) / scale, (cy as f64 + 0.5) / scale);
    frag.covers(inv.apply(world))
}

/// Number of canvas pixels covered by both fragments.
pub fn pair_overlap(
    a: &Fragment,
    pose_a: &RigidTransform2D,
    b: &Fragment,
    pose_b: &RigidTransform2D,
    scale: f64,
) -> usize {
    // Cheap rejection on bounding discs first.
    let ca = pose_a.apply(a.centroid);
    let cb = pose_b.apply(b.centroid);
    if (ca - cb).norm() > a.radius() + b.radius() + 2.0 {
        return 0;
    }
    let ba = CanvasBox::of(a, pose_a, scale);
    let bb = CanvasBox::of(b, pose_b, scale);
    let Some(bx) = ba.intersect(&bb) else {
        return 0;
    };
    let ia = pose_a.inverse();
    let ib = pose_b.inverse();
    let mut count = 0;
    for cy in bx.y0..bx.y1 {
        for cx in bx.x0..bx.x1 {
            if covers_canvas(a, &ia, cx, cy, scale) && covers_canvas(b, &ib, cx, cy, scale) {
                count += 1;
            }
        }
    }
    count
}

/// Whether two placed fragments overlap by more than the seam tolerance.
pub fn overlap_exceeds_seam(
    a: &Fragment,
    pose_a: &RigidTransform2D,
    b: &Fragment,
    pose_b: &RigidTransform2D,
    scale: f64,
) -> bool {
    pair_overlap(a, pose_a, b, pose_b, scale) as f64 > seam_tolerance(a.area, b.area, scale)
}

/// Number of canvas pixels covered by at least two of the placed fragments.
pub fn rasterize_and_overlap(frags: &[(&Fragment, RigidTransform2D)], canvas_scale: f64) -> usize {
    let boxes: Vec<CanvasBox> = frags
        .iter()
        .map(|(f, p)| CanvasBox::of(f, p, canvas_scale))
        .collect();
    let inverses: Vec<RigidTransform2D> = frags.iter().map(|(_, p)| p.inverse()).collect();
    // Only regions where two bounding boxes meet can hold overlap.
    let mut regions: Vec<Vec<CanvasBox>> = vec![Vec::new(); frags.len()];
    for i in 0..frags.len() {
        for j in i + 1..frags.len() {
            if let Some(bx) = boxes[i].intersect(&boxes[j]) {
                regions[i].push(bx);
                regions[j].push(bx);
            }
        }
    }
    let mut hits: HashMap<(i64, i64), u32> = HashMap::new();
    for (k, (frag, _)) in frags.iter().enumerate() {
        let mut seen = std::collections::HashSet::new();
        for bx in &regions[k] {
            for cy in bx.y0..bx.y1 {
                for cx in bx.x0..bx.x1 {
                    if seen.insert((cx, cy)) && covers_canvas(frag, &inverses[k], cx, cy, canvas_scale)
                    {
                        *hits.entry((cx, cy)).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    hits.values().filter(|&&c| c >= 2).count()
}
