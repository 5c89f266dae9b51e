use crate::geometry::{rgb_distance, Fragment, RigidTransform2D};

use super::PairwiseConfig;

/// Coarse placements of `b` in `a`'s frame from compatible side pairs.
///
/// Two sides are compatible when their lengths differ by less than
/// `length_ratio` and their mean colours by less than `color_tol`. Each
/// compatible pair lays `b`'s side, reversed, onto `a`'s side (fragments
/// traverse a shared seam in opposite directions) with the midpoints
/// coinciding; when the lengths differ by more than a couple of pixels the
/// two end-anchored placements are added as well. Near-identical seeds are
/// emitted once.
pub fn match_segments(a: &Fragment, b: &Fragment, cfg: &PairwiseConfig) -> Vec<RigidTransform2D> {
    let mut out = Vec::new();
    for sa in &a.polygon.segments {
        let (p0, p1) = a.polygon.endpoints(&a.contour, sa);
        let la = (p1 - p0).norm();
        if la < cfg.min_segment_len {
            continue;
        }
        for sb in &b.polygon.segments {
            let (q0, q1) = b.polygon.endpoints(&b.contour, sb);
            let lb = (q1 - q0).norm();
            if lb < cfg.min_segment_len {
                continue;
            }
            if (la - lb).abs() / la.max(lb) >= cfg.length_ratio {
                continue;
            }
            if rgb_distance(&sa.mean_color, &sb.mean_color) >= cfg.color_tol {
                continue;
            }
            let da = p1 - p0;
            let db = q0 - q1;
            let theta = da.y.atan2(da.x) - db.y.atan2(db.x);
            let rot = RigidTransform2D::rotation(theta);
            let mut anchors = vec![((p0 + p1) / 2.0, (q0 + q1) / 2.0)];
            if (la - lb).abs() >= ANCHOR_MIN_LENGTH_GAP {
                anchors.push((p0, q1));
                anchors.push((p1, q0));
            }
            for (pa, qb) in anchors {
                let t = pa - rot.rotate(qb);
                let seed = RigidTransform2D::new(theta, t.x, t.y);
                let probe = b.centroid;
                let dup = out.iter().any(|s: &RigidTransform2D| {
                    let (da, dt) = s.distance_at(&seed, probe);
                    da < SEED_DEDUP_ANGLE && dt < SEED_DEDUP_DIST
                });
                if !dup {
                    out.push(seed);
                }
            }
        }
    }
    out
}

const ANCHOR_MIN_LENGTH_GAP: f64 = 2.0;
const SEED_DEDUP_ANGLE: f64 = 0.5 * std::f64::consts::PI / 180.0;
const SEED_DEDUP_DIST: f64 = 1.0;
