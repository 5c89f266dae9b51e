use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pair_overlap, seam_tolerance, wrap_angle, Fragment, RigidTransform2D, DEFAULT_CANVAS_SCALE};
use crate::pairwise::AlignmentCandidate;

/// Width in pixels of the overlap strip tolerated between placed fragments,
/// taken along half the smaller perimeter (the longest seam it can have).
pub const OVERLAP_STRIP: f64 = 2.0;

/// Closure tolerance shared by loop closing and merge pose consistency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Radians.
    pub angle: f64,
    /// Pixels.
    pub trans: f64,
}

impl Tolerance {
    pub const ANGLE_DEG: f64 = 3.0;
    pub const TRANS_FRACTION: f64 = 0.015;

    /// Default tolerance for a puzzle whose canvas has the given diagonal.
    pub fn for_diagonal(diagonal: f64) -> Self {
        Self {
            angle: Self::ANGLE_DEG.to_radians(),
            trans: Self::TRANS_FRACTION * diagonal,
        }
    }

    /// Closed-interval test.
    pub fn admits(&self, angle: f64, trans: f64) -> bool {
        angle <= self.angle && trans <= self.trans
    }
}

/// Directed multi-graph over fragments with candidate alignments as edges.
///
/// Edges are kept sorted by `(src, dst, k)`; indicator vectors used
/// elsewhere in this module are indexed the same way. The penalty for
/// leaving an edge out is its gamma.
pub struct AssemblyGraph<'a> {
    pub fragments: &'a [Fragment],
    pub edges: Vec<AlignmentCandidate>,
    pub tol: Tolerance,
    pub canvas_scale: f64,
    perimeters: Vec<f64>,
    /// Edge indices touching each vertex, in edge order.
    incident: Vec<Vec<usize>>,
    /// Edge indices per unordered vertex pair.
    by_pair: BTreeMap<(usize, usize), Vec<usize>>,
}

impl<'a> AssemblyGraph<'a> {
    /// `fragments[i]` must be the fragment with id `i`.
    pub fn new(fragments: &'a [Fragment], mut edges: Vec<AlignmentCandidate>, tol: Tolerance) -> Result<Self> {
        if let Some((i, f)) = fragments.iter().enumerate().find(|(i, f)| f.id != *i) {
            return Err(Error::InvalidInput(format!("fragment at position {i} has id {}", f.id)));
        }
        let n = fragments.len();
        for e in &edges {
            if e.src >= n || e.dst >= n || e.src == e.dst {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}, {}) does not join two known fragments",
                    e.src, e.dst, e.k
                )));
            }
            if !e.transform.is_finite() || !e.gamma.is_finite() || e.gamma < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}, {}) has a non-finite transform or invalid gamma",
                    e.src, e.dst, e.k
                )));
            }
        }
        edges.sort_by_key(|e| e.key());
        if let Some(w) = edges.windows(2).find(|w| w[0].key() == w[1].key()) {
            return Err(Error::InvalidInput(format!("duplicate edge {:?}", w[0].key())));
        }
        let mut incident = vec![Vec::new(); n];
        let mut by_pair: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (idx, e) in edges.iter().enumerate() {
            incident[e.src].push(idx);
            incident[e.dst].push(idx);
            by_pair.entry(e.pair()).or_default().push(idx);
        }
        Ok(Self {
            fragments,
            edges,
            tol,
            canvas_scale: DEFAULT_CANVAS_SCALE,
            perimeters: fragments.iter().map(|f| f.contour.perimeter()).collect(),
            incident,
            by_pair,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.fragments.len()
    }

    pub fn penalty(&self, e: usize) -> f64 {
        self.edges[e].gamma
    }

    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    /// Edges joining `a` and `b` in either direction.
    pub fn between(&self, a: usize, b: usize) -> &[usize] {
        self.by_pair
            .get(&(a.min(b), a.max(b)))
            .map_or(&[], |v| v.as_slice())
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<usize>)> {
        self.by_pair.iter()
    }

    /// The other endpoint of edge `e` seen from `from`.
    pub fn other(&self, e: usize, from: usize) -> usize {
        let c = &self.edges[e];
        if c.src == from {
            c.dst
        } else {
            c.src
        }
    }

    /// Placement of the far endpoint in the frame of `from`.
    pub fn oriented(&self, e: usize, from: usize) -> RigidTransform2D {
        let c = &self.edges[e];
        if c.src == from {
            c.transform
        } else {
            c.transform.inverse()
        }
    }

    /// Edges sorted by gamma descending, ties by `(src, dst, k)`.
    pub fn by_confidence(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by(|&a, &b| self.edges[b].gamma.total_cmp(&self.edges[a].gamma).then(a.cmp(&b)));
        order
    }

    /// Whether two placed fragments overlap by more than the seam
    /// tolerance or an `OVERLAP_STRIP` wide band along their longest
    /// possible seam, whichever is larger. The band absorbs the pixel or
    /// so of drift that accumulates when poses are chained.
    pub fn collide(&self, a: usize, pa: &RigidTransform2D, b: usize, pb: &RigidTransform2D) -> bool {
        let s2 = self.canvas_scale * self.canvas_scale;
        let band = OVERLAP_STRIP * 0.5 * self.perimeters[a].min(self.perimeters[b]) * s2;
        let (fa, fb) = (&self.fragments[a], &self.fragments[b]);
        let limit = seam_tolerance(fa.area, fb.area, self.canvas_scale).max(band);
        pair_overlap(fa, pa, fb, pb, self.canvas_scale) as f64 > limit
    }

    /// Whether poses `p` and `q` of fragment `v` agree within tolerance,
    /// measured at the fragment's centroid.
    pub fn poses_agree(&self, v: usize, p: &RigidTransform2D, q: &RigidTransform2D) -> bool {
        let (da, dt) = p.distance_at(q, self.fragments[v].centroid);
        self.tol.admits(da, dt)
    }
}

/// `e = phi(T^-1 X_i^-1 X_j)` for an edge placing `j` at `T` in `i`'s frame.
pub fn edge_error(t: &RigidTransform2D, xi: &RigidTransform2D, xj: &RigidTransform2D) -> Vector3<f64> {
    let m = t.inverse() * xi.inverse() * *xj;
    Vector3::new(m.tx, m.ty, wrap_angle(m.theta))
}

/// Pose-graph term `f = e^T e` (unit information matrix).
pub fn edge_cost(t: &RigidTransform2D, xi: &RigidTransform2D, xj: &RigidTransform2D) -> f64 {
    edge_error(t, xi, xj).norm_squared()
}

/// Connected components of the selected edges, each ascending, in order of
/// their smallest member.
pub fn selected_components(g: &AssemblyGraph, selected: &[bool]) -> Vec<Vec<usize>> {
    let n = g.num_vertices();
    let mut comp: Vec<usize> = (0..n).collect();
    fn root(comp: &mut [usize], mut v: usize) -> usize {
        while comp[v] != v {
            comp[v] = comp[comp[v]];
            v = comp[v];
        }
        v
    }
    for (e, _) in selected.iter().enumerate().filter(|(_, &s)| s) {
        let (a, b) = (root(&mut comp, g.edges[e].src), root(&mut comp, g.edges[e].dst));
        if a != b {
            comp[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        let r = root(&mut comp, v);
        groups.entry(r).or_default().push(v);
    }
    groups.into_values().collect()
}

/// Total cost: `sum u * f + w * (1 - u)`, or infinity when two fragments of
/// one selected component overlap beyond the seam tolerance.
///
/// `selected` is indexed like `g.edges`. Poses are needed for every vertex
/// touched by a selected edge.
pub fn objective(g: &AssemblyGraph, poses: &BTreeMap<usize, RigidTransform2D>, selected: &[bool]) -> Result<f64> {
    if selected.len() != g.edges.len() {
        return Err(Error::InvalidInput(format!(
            "{} indicators for {} edges",
            selected.len(),
            g.edges.len()
        )));
    }
    let mut total = 0.0;
    let mut pairs = BTreeSet::new();
    for (e, c) in g.edges.iter().enumerate() {
        if !selected[e] {
            total += g.penalty(e);
            continue;
        }
        if !pairs.insert(c.pair()) {
            return Err(Error::InvalidInput(format!(
                "two selected edges join fragments {} and {}",
                c.src, c.dst
            )));
        }
        let (Some(xi), Some(xj)) = (poses.get(&c.src), poses.get(&c.dst)) else {
            return Err(Error::InvalidInput(format!(
                "selected edge ({}, {}, {}) has an endpoint without a pose",
                c.src, c.dst, c.k
            )));
        };
        total += edge_cost(&c.transform, xi, xj);
    }
    for comp in selected_components(g, selected) {
        for (n, &a) in comp.iter().enumerate() {
            for &b in &comp[n + 1..] {
                if g.collide(a, &poses[&a], b, &poses[&b]) {
                    return Ok(f64::INFINITY);
                }
            }
        }
    }
    Ok(total)
}
