use image::RgbaImage;
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::contour::{trace_outer_boundary, Contour};
use super::simplify::{rdp_simplify, PolygonApprox};
use crate::error::{Error, Result};

/// Parameters for deriving a fragment's outline from its alpha mask.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlineParams {
    /// RDP chord tolerance in pixels.
    pub eps: f64,
    /// Maximum per-point RGB distance from a side's mean colour.
    pub color_tol: f64,
    /// Contour points used for central-difference normals.
    pub normal_window: usize,
}

impl Default for OutlineParams {
    fn default() -> Self {
        Self {
            eps: 2.0,
            color_tol: 60.0,
            normal_window: 7,
        }
    }
}

/// An irregular image piece in its own local frame.
#[derive(Clone, Debug)]
pub struct Fragment {
    pub id: usize,
    pub raster: RgbaImage,
    pub contour: Contour,
    pub polygon: PolygonApprox,
    /// Outward unit normal per contour point.
    pub normals: Vec<Vector2<f64>>,
    /// Number of opaque pixels.
    pub area: usize,
    /// Mean position of opaque pixel centres, in local coordinates.
    pub centroid: Vector2<f64>,
}

impl Fragment {
    pub fn new(id: usize, raster: RgbaImage, params: &OutlineParams) -> Result<Self> {
        let mut area = 0usize;
        let mut sum = Vector2::zeros();
        for (x, y, p) in raster.enumerate_pixels() {
            if p[3] > 0 {
                area += 1;
                sum += Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
            }
        }
        if area == 0 {
            return Err(Error::InvalidInput(format!("fragment {id} has no opaque pixels")));
        }
        let contour = trace_outer_boundary(&raster)?;
        let polygon = rdp_simplify(&contour, params.eps, params.color_tol)?;
        let normals = contour.normals(params.normal_window);
        Ok(Self {
            id,
            raster,
            contour,
            polygon,
            normals,
            area,
            centroid: sum / area as f64,
        })
    }

    pub fn width(&self) -> u32 {
        self.raster.width()
    }

    pub fn height(&self) -> u32 {
        self.raster.height()
    }

    /// Whether the local point `p` falls on an opaque pixel.
    #[inline]
    pub fn covers(&self, p: Vector2<f64>) -> bool {
        if p.x < 0.0 || p.y < 0.0 {
            return false;
        }
        let (x, y) = (p.x as u32, p.y as u32);
        x < self.raster.width() && y < self.raster.height() && self.raster.get_pixel(x, y)[3] > 0
    }

    /// Radius of the disc around the centroid that contains every pixel.
    pub fn radius(&self) -> f64 {
        let (w, h) = (self.width() as f64, self.height() as f64);
        [
            Vector2::new(0.0, 0.0),
            Vector2::new(w, 0.0),
            Vector2::new(0.0, h),
            Vector2::new(w, h),
        ]
        .iter()
        .map(|c| (c - self.centroid).norm())
        .fold(0.0, f64::max)
    }
}
