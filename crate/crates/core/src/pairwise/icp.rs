use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::geometry::{Fragment, PointGrid, RigidTransform2D, Rgb};

use super::PairwiseConfig;

fn rgb_distance_sq(a: &Rgb, b: &Rgb) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Least-squares rigid transform taking `src[k]` onto `dst[k]`.
fn fit_rigid(src: &[Vector2<f64>], dst: &[Vector2<f64>]) -> RigidTransform2D {
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vector2<f64>>() / n;
    let cd = dst.iter().sum::<Vector2<f64>>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (s, d) in src.iter().zip(dst) {
        let s = s - cs;
        let d = d - cd;
        sxx += s.dot(&d);
        sxy += s.x * d.y - s.y * d.x;
    }
    let theta = sxy.atan2(sxx);
    let rot = RigidTransform2D::rotation(theta);
    let t = cd - rot.rotate(cs);
    RigidTransform2D::new(theta, t.x, t.y)
}

/// Mutually nearest contour point pairs `(index in a, index in b)` within
/// `max_dist`, with `b` placed in `a`'s frame by `t`.
fn mutual_pairs(
    a: &Fragment,
    a_grid: &PointGrid,
    b: &Fragment,
    t: &RigidTransform2D,
    max_dist: f64,
    beta: f64,
) -> Vec<(usize, usize)> {
    let a_pts = a.contour.points();
    let (a_cols, b_cols) = (a.contour.colors(), b.contour.colors());
    let moved: Vec<Vector2<f64>> = b.contour.points().iter().map(|p| t.apply(*p)).collect();
    let b_grid = PointGrid::new(&moved, max_dist);
    let b2 = beta * beta;
    let mut pairs = Vec::new();
    for (ib, q) in moved.iter().enumerate() {
        let Some((ia, _)) = a_grid.nearest_by(q, max_dist, |ia, d2| {
            d2 + b2 * rgb_distance_sq(&a_cols[ia], &b_cols[ib])
        }) else {
            continue;
        };
        if let Some((back, _)) = b_grid.nearest_by(&a_pts[ia], max_dist, |jb, d2| {
            d2 + b2 * rgb_distance_sq(&a_cols[ia], &b_cols[jb])
        }) {
            if back == ib {
                pairs.push((ia, ib));
            }
        }
    }
    pairs
}

/// Point-to-point ICP on boundary contours, refining the placement of `b`
/// in `a`'s frame.
///
/// Correspondences are mutually nearest contour points within
/// `icp_max_dist`. Iteration stops when the RMS residual improves by less
/// than `icp_min_improvement` or after `icp_max_iter` rounds; the returned
/// RMS is that of the final transform.
///
/// Rasterised seams are staircases that repeat along their length, so a
/// purely geometric fit can lock onto a copy shifted by a few pixels. When
/// `icp_color_weight` is positive a second pass re-pairs points by position
/// and colour together, starting from the geometric solution, and a final
/// geometric pass snaps the result back onto the contours; the outcome is
/// kept only if its residual beats the first pass.
pub fn icp_refine(
    a: &Fragment,
    b: &Fragment,
    init: &RigidTransform2D,
    cfg: &PairwiseConfig,
) -> Result<(RigidTransform2D, f64)> {
    if !init.is_finite() {
        return Err(Error::InvalidInput("initial transform is not finite".into()));
    }
    let a_grid = PointGrid::new(a.contour.points(), cfg.icp_max_dist);
    let coarse = icp_pass(a, &a_grid, b, init, cfg, 0.0)?;
    if cfg.icp_color_weight <= 0.0 || coarse.1 < 1e-9 {
        return Ok(coarse);
    }
    let polished = icp_pass(a, &a_grid, b, &coarse.0, cfg, cfg.icp_color_weight)
        .and_then(|(t, _)| icp_pass(a, &a_grid, b, &t, cfg, 0.0));
    Ok(match polished {
        Ok(p) if p.1 < coarse.1 => p,
        _ => coarse,
    })
}

fn icp_pass(
    a: &Fragment,
    a_grid: &PointGrid,
    b: &Fragment,
    init: &RigidTransform2D,
    cfg: &PairwiseConfig,
    beta: f64,
) -> Result<(RigidTransform2D, f64)> {
    let a_pts = a.contour.points();
    let b_pts = b.contour.points();
    let rms_of = |t: &RigidTransform2D, pairs: &[(usize, usize)]| -> f64 {
        let s: f64 = pairs
            .iter()
            .map(|&(ia, ib)| (t.apply(b_pts[ib]) - a_pts[ia]).norm_squared())
            .sum();
        (s / pairs.len().max(1) as f64).sqrt()
    };

    let mut t = *init;
    let mut pairs = mutual_pairs(a, a_grid, b, &t, cfg.icp_max_dist, beta);
    if pairs.len() < cfg.icp_min_correspondences {
        return Err(Error::NoOverlap { found: pairs.len() });
    }
    let mut rms = rms_of(&t, &pairs);
    for _ in 0..cfg.icp_max_iter {
        let src: Vec<Vector2<f64>> = pairs.iter().map(|&(_, ib)| b_pts[ib]).collect();
        let dst: Vec<Vector2<f64>> = pairs.iter().map(|&(ia, _)| a_pts[ia]).collect();
        let next = fit_rigid(&src, &dst);
        let next_pairs = mutual_pairs(a, a_grid, b, &next, cfg.icp_max_dist, beta);
        if next_pairs.len() < cfg.icp_min_correspondences {
            break;
        }
        let next_rms = rms_of(&next, &next_pairs);
        let improvement = rms - next_rms;
        t = next;
        pairs = next_pairs;
        rms = next_rms;
        if improvement < cfg.icp_min_improvement {
            break;
        }
    }
    Ok((t, rms))
}
