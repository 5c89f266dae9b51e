//! Pairwise alignment candidates between fragments.
//!
//! For every fragment pair the polygon sides are matched against each other
//! to seed coarse transforms, each seed is refined by ICP on the boundary
//! contours, refined alignments that overlap beyond the seam tolerance are
//! dropped, and the survivors are scored by the number of well-aligned
//! boundary pixels.

mod candidate;
mod icp;
mod score;
mod segments;

use serde::{Deserialize, Serialize};

pub use candidate::{
    extract_candidates, extract_pair, read_candidates, write_candidates, AlignmentCandidate, Roi,
};
pub use icp::icp_refine;
pub use score::{matched_pixel_score, matched_points};
pub use segments::match_segments;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseConfig {
    /// Largest relative length difference between matched sides.
    pub length_ratio: f64,
    /// Largest RGB distance between matched sides' mean colours, and between
    /// matched boundary pixels when scoring.
    pub color_tol: f64,
    /// Sides shorter than this are not used as seeds.
    pub min_segment_len: f64,
    pub icp_max_dist: f64,
    pub icp_max_iter: usize,
    pub icp_min_improvement: f64,
    pub icp_min_correspondences: usize,
    /// Pixels of spatial distance equivalent to one unit of RGB distance
    /// when pairing contour points; 0 pairs by position alone.
    pub icp_color_weight: f64,
    /// Neighbour radius for the matched-pixel score.
    pub score_dist: f64,
    /// Normals of matched pixels must have a dot product below this.
    pub score_normal_dot: f64,
    pub dedup_angle: f64,
    pub dedup_dist: f64,
    pub max_per_pair: usize,
    pub canvas_scale: f64,
    /// Candidates scoring fewer matched pixels are discarded.
    pub min_raw_score: usize,
}

impl Default for PairwiseConfig {
    fn default() -> Self {
        Self {
            length_ratio: 0.25,
            color_tol: 60.0,
            min_segment_len: 10.0,
            icp_max_dist: 15.0,
            icp_max_iter: 50,
            icp_min_improvement: 1e-3,
            icp_min_correspondences: 8,
            icp_color_weight: 2.0,
            score_dist: 3.0,
            score_normal_dot: -0.5,
            dedup_angle: 3f64.to_radians(),
            dedup_dist: 5.0,
            max_per_pair: 10,
            canvas_scale: crate::geometry::raster::DEFAULT_CANVAS_SCALE,
            min_raw_score: 8,
        }
    }
}
