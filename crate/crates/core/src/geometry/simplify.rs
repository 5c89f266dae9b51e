use nalgebra::Vector2;

use super::contour::{rgb_distance, Contour, Rgb};
use crate::error::{Error, Result};

/// One polygon side: contour points `start..=end` (indices wrap modulo the
/// contour length, and `end` may equal `start + len` for the closing side).
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub mean_color: Rgb,
}

/// Polygon approximation of a closed contour whose sides are both
/// geometrically tight (every point within `eps` of its chord) and colour
/// homogeneous (every point within `color_tol` of the side's mean colour).
#[derive(Clone, Debug, PartialEq)]
pub struct PolygonApprox {
    pub segments: Vec<Segment>,
    pub eps: f64,
    pub color_tol: f64,
}

impl PolygonApprox {
    pub fn endpoints(&self, contour: &Contour, seg: &Segment) -> (Vector2<f64>, Vector2<f64>) {
        let n = contour.len();
        (contour.points()[seg.start % n], contour.points()[seg.end % n])
    }

    pub fn segment_length(&self, contour: &Contour, seg: &Segment) -> f64 {
        let (a, b) = self.endpoints(contour, seg);
        (b - a).norm()
    }
}

fn point_to_chord(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn mean_color(colors: &[Rgb], idx: impl Iterator<Item = usize>) -> Rgb {
    let mut acc = [0.0; 3];
    let mut n = 0.0;
    for i in idx {
        for c in 0..3 {
            acc[c] += colors[i][c];
        }
        n += 1.0;
    }
    if n > 0.0 {
        for v in &mut acc {
            *v /= n;
        }
    }
    acc
}

struct Simplifier<'a> {
    points: &'a [Vector2<f64>],
    colors: &'a [Rgb],
    eps: f64,
    color_tol: f64,
}

impl Simplifier<'_> {
    fn n(&self) -> usize {
        self.points.len()
    }

    fn pt(&self, i: usize) -> Vector2<f64> {
        self.points[i % self.n()]
    }

    /// Colour samples owned by the side `start..=end`: every point except the
    /// shared end vertex.
    fn owned(&self, start: usize, end: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n();
        (start..end).map(move |i| i % n)
    }

    fn color_split(&self, start: usize, end: usize) -> Option<usize> {
        if end - start < 2 {
            return None;
        }
        let mean = mean_color(self.colors, self.owned(start, end));
        let worst = self
            .owned(start, end)
            .map(|i| rgb_distance(&self.colors[i], &mean))
            .fold(0.0, f64::max);
        if worst <= self.color_tol {
            return None;
        }
        // Split where the two sides' mean colours differ the most; ties go to
        // the most balanced split.
        let mid = (start + end) as f64 / 2.0;
        let mut best: Option<(usize, f64)> = None;
        for m in start + 1..end {
            let left = mean_color(self.colors, self.owned(start, m));
            let right = mean_color(self.colors, self.owned(m, end));
            let d = rgb_distance(&left, &right);
            let better = match best {
                None => true,
                Some((bm, bd)) => {
                    d > bd + 1e-9
                        || ((d - bd).abs() <= 1e-9
                            && (m as f64 - mid).abs() < (bm as f64 - mid).abs())
                }
            };
            if better {
                best = Some((m, d));
            }
        }
        best.map(|(m, _)| m)
    }

    fn run(&self, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
        let a = self.pt(start);
        let b = self.pt(end);
        let mut far = None;
        let mut far_d = self.eps;
        for i in start + 1..end {
            let d = point_to_chord(self.pt(i), a, b);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        if let Some(m) = far {
            self.run(start, m, out);
            self.run(m, end, out);
            return;
        }
        match self.color_split(start, end) {
            Some(m) => {
                self.run(start, m, out);
                self.run(m, end, out);
            }
            None => out.push((start, end)),
        }
    }
}

/// Colour-aware Ramer-Douglas-Peucker simplification of a closed contour.
///
/// Sides are first split at the farthest point from their chord until all
/// points are within `eps`; a side that is still not colour-homogeneous is
/// split at the index separating the most different mean colours.
pub fn rdp_simplify(contour: &Contour, eps: f64, color_tol: f64) -> Result<PolygonApprox> {
    let n = contour.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "contour needs at least 3 points, got {n}"
        )));
    }
    if !(eps >= 0.0 && color_tol >= 0.0) {
        return Err(Error::Parameter("eps and color_tol must be non-negative".into()));
    }
    let pts = contour.points();
    let origin = pts[0];
    let far = (1..n)
        .max_by(|&i, &j| {
            (pts[i] - origin)
                .norm_squared()
                .total_cmp(&(pts[j] - origin).norm_squared())
                .then(j.cmp(&i))
        })
        .unwrap_or(n / 2);

    let s = Simplifier {
        points: pts,
        colors: contour.colors(),
        eps,
        color_tol,
    };
    let mut spans = Vec::new();
    s.run(0, far, &mut spans);
    s.run(far, n, &mut spans);

    let segments = spans
        .into_iter()
        .map(|(start, end)| Segment {
            start,
            end,
            mean_color: mean_color(contour.colors(), s.owned(start, end)),
        })
        .collect();
    Ok(PolygonApprox {
        segments,
        eps,
        color_tol,
    })
}

/// Re-checks both side constraints; used by tests and debug assertions.
pub fn check_polygon(contour: &Contour, poly: &PolygonApprox) -> bool {
    let n = contour.len();
    let pts = contour.points();
    let cols = contour.colors();
    let mut covered = 0;
    for (k, seg) in poly.segments.iter().enumerate() {
        let next = &poly.segments[(k + 1) % poly.segments.len()];
        if seg.end % n != next.start % n {
            return false;
        }
        covered += seg.end - seg.start;
        let (a, b) = (pts[seg.start % n], pts[seg.end % n]);
        for i in seg.start..=seg.end {
            if point_to_chord(pts[i % n], a, b) > poly.eps + 1e-9 {
                return false;
            }
        }
        if seg.end - seg.start >= 2 {
            for i in seg.start..seg.end {
                if rgb_distance(&cols[i % n], &seg.mean_color) > poly.color_tol + 1e-9 {
                    return false;
                }
            }
        }
    }
    covered == n
}
