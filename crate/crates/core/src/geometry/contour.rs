use image::RgbaImage;
use nalgebra::Vector2;

use crate::error::{Error, Result};

pub type Rgb = [f64; 3];

pub fn rgb_distance(a: &Rgb, b: &Rgb) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    (d0 * d0 + d1 * d1 + d2 * d2).sqrt()
}

/// Closed boundary curve with one sampled colour per point.
///
/// Points lie on the pixel-corner lattice: the curve runs along the cracks
/// between opaque and transparent pixels, so two fragments cut from the same
/// image share their seam exactly. Orientation is counter-clockwise in the
/// sense of a positive shoelace area in pixel coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    points: Vec<Vector2<f64>>,
    colors: Vec<Rgb>,
}

impl Contour {
    pub fn new(points: Vec<Vector2<f64>>, colors: Vec<Rgb>) -> Result<Self> {
        if points.len() != colors.len() {
            return Err(Error::InvalidInput(format!(
                "contour has {} points but {} colours",
                points.len(),
                colors.len()
            )));
        }
        let mut pts: Vec<Vector2<f64>> = Vec::with_capacity(points.len());
        let mut cols = Vec::with_capacity(colors.len());
        for (p, c) in points.into_iter().zip(colors) {
            if pts.last() != Some(&p) {
                pts.push(p);
                cols.push(c);
            }
        }
        while pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
            cols.pop();
        }
        if pts.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "contour needs at least 3 distinct points, got {}",
                pts.len()
            )));
        }
        if signed_area(&pts) < 0.0 {
            pts.reverse();
            cols.reverse();
        }
        Ok(Self {
            points: pts,
            colors: cols,
        })
    }

    pub fn points(&self) -> &[Vector2<f64>] {
        &self.points
    }

    pub fn colors(&self) -> &[Rgb] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| (self.points[(i + 1) % n] - self.points[i]).norm())
            .sum()
    }

    /// Outward unit normals from a central difference over a `window`-point
    /// neighbourhood.
    pub fn normals(&self, window: usize) -> Vec<Vector2<f64>> {
        let n = self.points.len();
        let h = (window / 2).max(1);
        (0..n)
            .map(|i| {
                let next = self.points[(i + h) % n];
                let prev = self.points[(i + n - h % n) % n];
                let d = next - prev;
                // Positive orientation keeps the interior on the right of the
                // direction of travel in y-down pixel coordinates.
                let nrm = Vector2::new(d.y, -d.x);
                let len = nrm.norm();
                if len > 0.0 {
                    nrm / len
                } else {
                    Vector2::zeros()
                }
            })
            .collect()
    }
}

pub fn signed_area(points: &[Vector2<f64>]) -> f64 {
    let n = points.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

fn opaque(img: &RgbaImage, x: i64, y: i64) -> bool {
    x >= 0
        && y >= 0
        && (x as u32) < img.width()
        && (y as u32) < img.height()
        && img.get_pixel(x as u32, y as u32)[3] > 0
}

/// Traces the outer crack boundary of the first opaque region in raster order.
pub fn trace_outer_boundary(img: &RgbaImage) -> Result<Contour> {
    let start = img
        .enumerate_pixels()
        .find(|(_, _, p)| p[3] > 0)
        .map(|(x, y, _)| (x as i64, y as i64))
        .ok_or_else(|| Error::InvalidInput("raster has no opaque pixels".into()))?;

    // Each boundary edge is identified by the pixel it belongs to and the side
    // it lies on. Travelling clockwise on screen keeps the pixel on the right.
    #[derive(Clone, Copy, PartialEq, Eq)]
    enum Side {
        Top,
        Right,
        Bottom,
        Left,
    }
    // Start corner, direction.
    fn edge_geometry(px: (i64, i64), side: Side) -> ((i64, i64), (i64, i64)) {
        let (x, y) = px;
        match side {
            Side::Top => ((x, y), (1, 0)),
            Side::Right => ((x + 1, y), (0, 1)),
            Side::Bottom => ((x + 1, y + 1), (-1, 0)),
            Side::Left => ((x, y + 1), (0, -1)),
        }
    }

    let mut points = Vec::new();
    let mut colors = Vec::new();
    let mut px = start;
    let mut side = Side::Top;
    let limit = 4 * (img.width() as usize + 2) * (img.height() as usize + 2);
    for _ in 0..limit {
        let (corner, dir) = edge_geometry(px, side);
        points.push(Vector2::new(corner.0 as f64, corner.1 as f64));
        let p = img.get_pixel(px.0 as u32, px.1 as u32);
        colors.push([p[0] as f64, p[1] as f64, p[2] as f64]);

        // At the end corner of this edge, prefer turning toward the interior
        // (diagonal neighbours are treated as disconnected).
        let (dx, dy) = dir;
        let left = (dy, -dx);
        let ahead = (px.0 + dx, px.1 + dy);
        let ahead_left = (ahead.0 + left.0, ahead.1 + left.1);
        let (npx, nside) = if opaque(img, ahead_left.0, ahead_left.1)
            && opaque(img, ahead.0, ahead.1)
        {
            // Concave corner: continue on the pixel diagonally ahead.
            (ahead_left, rotate_side_ccw(side))
        } else if opaque(img, ahead.0, ahead.1) {
            (ahead, side)
        } else {
            (px, rotate_side_cw(side))
        };
        px = npx;
        side = nside;
        if px == start && side == Side::Top {
            return Contour::new(points, colors);
        }
    }

    fn rotate_side_cw(s: Side) -> Side {
        match s {
            Side::Top => Side::Right,
            Side::Right => Side::Bottom,
            Side::Bottom => Side::Left,
            Side::Left => Side::Top,
        }
    }
    fn rotate_side_ccw(s: Side) -> Side {
        match s {
            Side::Top => Side::Left,
            Side::Left => Side::Bottom,
            Side::Bottom => Side::Right,
            Side::Right => Side::Top,
        }
    }

    Err(Error::InvalidInput("boundary tracing did not close".into()))
}
