//! Rigid transforms, boundary contours, polygon approximation and raster
//! overlap tests shared by the rest of the crate.

pub mod contour;
pub mod fragment;
pub mod grid;
pub mod raster;
pub mod simplify;
pub mod transform;

pub use contour::{rgb_distance, Contour, Rgb};
pub use fragment::{Fragment, OutlineParams};
pub use grid::PointGrid;
pub use raster::{
    overlap_exceeds_seam, pair_overlap, rasterize_and_overlap, seam_tolerance, DEFAULT_CANVAS_SCALE,
};
pub use simplify::{rdp_simplify, PolygonApprox, Segment};
pub use transform::{wrap_angle, RigidTransform2D};
