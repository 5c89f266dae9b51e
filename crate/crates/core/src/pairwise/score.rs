use nalgebra::Vector2;

use crate::geometry::{rgb_distance, Fragment, PointGrid, RigidTransform2D};

use super::PairwiseConfig;

/// Boundary points of `a` that are well aligned with `b` placed by `t`:
/// the nearest boundary point of `b` lies within `score_dist`, has a similar
/// colour, and faces the opposite way.
pub fn matched_points(
    a: &Fragment,
    b: &Fragment,
    t: &RigidTransform2D,
    cfg: &PairwiseConfig,
) -> Vec<usize> {
    let moved: Vec<Vector2<f64>> = b.contour.points().iter().map(|p| t.apply(*p)).collect();
    let grid = PointGrid::new(&moved, cfg.score_dist.max(1.0));
    let a_cols = a.contour.colors();
    let b_cols = b.contour.colors();
    a.contour
        .points()
        .iter()
        .enumerate()
        .filter(|(ia, p)| {
            let Some((ib, _)) = grid.nearest(p, cfg.score_dist) else {
                return false;
            };
            let nb = t.rotate(b.normals[ib]);
            a.normals[*ia].dot(&nb) < cfg.score_normal_dot
                && rgb_distance(&a_cols[*ia], &b_cols[ib]) < cfg.color_tol
        })
        .map(|(ia, _)| ia)
        .collect()
}

/// Count of well-aligned boundary pixels of `a` against `b` placed by `t`.
pub fn matched_pixel_score(
    a: &Fragment,
    b: &Fragment,
    t: &RigidTransform2D,
    cfg: &PairwiseConfig,
) -> usize {
    matched_points(a, b, t, cfg).len()
}
