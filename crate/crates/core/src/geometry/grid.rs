use nalgebra::Vector2;

/// Uniform bucket grid for fixed-radius nearest-neighbour queries.
///
/// Buckets cover the points' bounding box densely, stored as one index
/// array sliced per cell.
pub struct PointGrid<'a> {
    points: &'a [Vector2<f64>],
    cell: f64,
    origin: Vector2<f64>,
    nx: i64,
    ny: i64,
    starts: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> PointGrid<'a> {
    pub fn new(points: &'a [Vector2<f64>], cell: f64) -> Self {
        let cell = cell.max(1e-6);
        let mut lo = Vector2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vector2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        if points.is_empty() {
            lo = Vector2::zeros();
            hi = Vector2::zeros();
        }
        let nx = ((hi.x - lo.x) / cell).floor() as i64 + 1;
        let ny = ((hi.y - lo.y) / cell).floor() as i64 + 1;
        let mut grid = Self {
            points,
            cell,
            origin: lo,
            nx,
            ny,
            starts: vec![0; (nx * ny + 1) as usize],
            order: vec![0; points.len()],
        };
        let cells: Vec<usize> = points
            .iter()
            .map(|p| {
                let (cx, cy) = grid.key(p);
                (cy * nx + cx) as usize
            })
            .collect();
        for &c in &cells {
            grid.starts[c + 1] += 1;
        }
        for c in 0..grid.starts.len() - 1 {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.order[fill[c]] = i;
            fill[c] += 1;
        }
        grid
    }

    fn key(&self, p: &Vector2<f64>) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.cell).floor() as i64,
            ((p.y - self.origin.y) / self.cell).floor() as i64,
        )
    }

    /// Index and distance of the closest point within `radius`; ties go to
    /// the lower index.
    pub fn nearest(&self, q: &Vector2<f64>, radius: f64) -> Option<(usize, f64)> {
        self.nearest_by(q, radius, |_, d2| d2)
            .map(|(i, _)| (i, (self.points[i] - q).norm()))
    }

    /// Point within `radius` minimising `cost(index, squared distance)`;
    /// ties go to the lower index.
    pub fn nearest_by<F>(&self, q: &Vector2<f64>, radius: f64, cost: F) -> Option<(usize, f64)>
    where
        F: Fn(usize, f64) -> f64,
    {
        let mut best: Option<(usize, f64)> = None;
        if self.points.is_empty() || !(q.x.is_finite() && q.y.is_finite()) {
            return best;
        }
        let reach = (radius / self.cell).ceil() as i64;
        let (kx, ky) = self.key(q);
        let r2 = radius * radius;
        for cy in (ky - reach).max(0)..=(ky + reach).min(self.ny - 1) {
            for cx in (kx - reach).max(0)..=(kx + reach).min(self.nx - 1) {
                let c = (cy * self.nx + cx) as usize;
                for &i in &self.order[self.starts[c]..self.starts[c + 1]] {
                    let d2 = (self.points[i] - q).norm_squared();
                    if d2 <= r2 {
                        let c = cost(i, d2);
                        let better = match best {
                            None => true,
                            Some((bi, bc)) => c < bc || (c == bc && i < bi),
                        };
                        if better {
                            best = Some((i, c));
                        }
                    }
                }
            }
        }
        best
    }
}
