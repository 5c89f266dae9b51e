use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, RigidTransform2D};

use super::graph::{AssemblyGraph, Tolerance};

/// One traversed edge of a loop; `forward` walks it from `src` to `dst`,
/// otherwise the inverse transform is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LoopEdge {
    pub edge: usize,
    pub forward: bool,
}

impl LoopEdge {
    pub fn fwd(edge: usize) -> Self {
        Self { edge, forward: true }
    }

    pub fn rev(edge: usize) -> Self {
        Self { edge, forward: false }
    }

    fn ends(&self, g: &AssemblyGraph) -> (usize, usize) {
        let c = &g.edges[self.edge];
        if self.forward {
            (c.src, c.dst)
        } else {
            (c.dst, c.src)
        }
    }

    fn transform(&self, g: &AssemblyGraph) -> RigidTransform2D {
        let t = g.edges[self.edge].transform;
        if self.forward {
            t
        } else {
            t.inverse()
        }
    }
}

/// A set of mutually consistent edges with the fragment poses they imply.
///
/// Loops found by enumeration keep their edges in traversal order; merged
/// loops list their edges by index. Poses are expressed in the frame of the
/// first vertex of the loop the set grew from.
#[derive(Clone, Debug, PartialEq)]
pub struct Loop {
    pub edges: Vec<LoopEdge>,
    pub vertices: BTreeSet<usize>,
    pub poses: BTreeMap<usize, RigidTransform2D>,
    /// Sum of gamma over the edges.
    pub score: f64,
    ids: Vec<usize>,
}

impl Loop {
    /// Builds a loop from a chained edge cycle, deriving poses by walking
    /// all but the last edge from the first edge's tail.
    pub fn from_cycle(g: &AssemblyGraph, edges: Vec<LoopEdge>) -> Result<Self> {
        let start = check_chain(g, &edges)?;
        let mut poses = BTreeMap::new();
        let mut pose = RigidTransform2D::identity();
        poses.insert(start, pose);
        for le in &edges[..edges.len() - 1] {
            pose = pose * le.transform(g);
            poses.insert(le.ends(g).1, pose);
        }
        let vertices = poses.keys().copied().collect();
        let mut ids: Vec<usize> = edges.iter().map(|e| e.edge).collect();
        ids.sort_unstable();
        let score = ids.iter().map(|&e| g.edges[e].gamma).sum();
        Ok(Self {
            edges,
            vertices,
            poses,
            score,
            ids,
        })
    }

    /// Edge indices, ascending.
    pub fn edge_ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn contains_edge(&self, e: usize) -> bool {
        self.ids.binary_search(&e).is_ok()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Loops by merge level; level 0 holds the enumerated short loops.
#[derive(Clone, Debug, Default)]
pub struct LoopSet {
    pub levels: Vec<Vec<Loop>>,
}

/// Checks that `edges` chain head to tail and return to the start, with no
/// vertex visited twice; returns the start vertex.
fn check_chain(g: &AssemblyGraph, edges: &[LoopEdge]) -> Result<usize> {
    if edges.len() < 2 {
        return Err(Error::MalformedLoop(format!("{} edges cannot form a loop", edges.len())));
    }
    if let Some(le) = edges.iter().find(|le| le.edge >= g.edges.len()) {
        return Err(Error::MalformedLoop(format!("edge index {} out of range", le.edge)));
    }
    let start = edges[0].ends(g).0;
    let mut at = start;
    let mut seen = BTreeSet::new();
    for le in edges {
        let (from, to) = le.ends(g);
        if from != at {
            return Err(Error::MalformedLoop(format!(
                "edge {} leaves {from} but the walk is at {at}",
                le.edge
            )));
        }
        if !seen.insert(from) {
            return Err(Error::MalformedLoop(format!("vertex {from} is visited twice")));
        }
        at = to;
    }
    if at != start {
        return Err(Error::MalformedLoop(format!("walk ends at {at}, not at {start}")));
    }
    Ok(start)
}

/// `(|theta|, |t|)` of the product of the loop's transforms; zero for a
/// perfectly consistent loop.
pub fn loop_residual(g: &AssemblyGraph, edges: &[LoopEdge]) -> Result<(f64, f64)> {
    check_chain(g, edges)?;
    let prod = edges
        .iter()
        .fold(RigidTransform2D::identity(), |acc, le| acc * le.transform(g));
    Ok((wrap_angle(prod.theta).abs(), prod.t().norm()))
}

pub fn is_closed(g: &AssemblyGraph, edges: &[LoopEdge], tol: &Tolerance) -> Result<bool> {
    let (a, t) = loop_residual(g, edges)?;
    Ok(tol.admits(a, t))
}

/// Whether any two of the loop's fragments overlap beyond seam tolerance.
fn self_intersects(g: &AssemblyGraph, poses: &BTreeMap<usize, RigidTransform2D>) -> bool {
    let placed: Vec<(&usize, &RigidTransform2D)> = poses.iter().collect();
    placed.iter().enumerate().any(|(n, (a, pa))| {
        placed[n + 1..]
            .iter()
            .any(|(b, pb)| g.collide(**a, pa, **b, pb))
    })
}

/// Orientation of edge `e` when walked from `from`.
fn walk(g: &AssemblyGraph, e: usize, from: usize) -> LoopEdge {
    if g.edges[e].src == from {
        LoopEdge::fwd(e)
    } else {
        LoopEdge::rev(e)
    }
}

/// Whether a candidate between `a` and `b` agrees with the poses the loop
/// assigns to them.
fn has_consistent_chord(g: &AssemblyGraph, l: &Loop, a: usize, b: usize) -> bool {
    let (pa, pb) = (l.poses[&a], l.poses[&b]);
    g.between(a, b)
        .iter()
        .any(|&e| g.poses_agree(b, &(pa * g.oriented(e, a)), &pb))
}

/// All closed, self-intersection-free, induced loops of length 3 and 4,
/// trying every combination of parallel candidates.
///
/// Triangles cannot have chords. A 4-cycle counts as having a chord only
/// when some candidate across it agrees with the cycle's own poses; an
/// unrelated candidate between two of its vertices does not break it.
pub fn find_induced_loops(g: &AssemblyGraph) -> Vec<Loop> {
    let n = g.num_vertices();
    let nbrs: Vec<BTreeSet<usize>> = (0..n)
        .map(|v| g.incident(v).iter().map(|&e| g.other(e, v)).collect())
        .collect();
    (0..n)
        .into_par_iter()
        .flat_map_iter(|a| {
            let mut out = Vec::new();
            let up: Vec<usize> = nbrs[a].iter().copied().filter(|&v| v > a).collect();
            // Triangles a-b-c with a < b < c.
            for (x, &b) in up.iter().enumerate() {
                for &c in &up[x + 1..] {
                    if !nbrs[b].contains(&c) {
                        continue;
                    }
                    for &e1 in g.between(a, b) {
                        for &e2 in g.between(b, c) {
                            for &e3 in g.between(c, a) {
                                let cyc = vec![walk(g, e1, a), walk(g, e2, b), walk(g, e3, c)];
                                if let Some(l) = accept(g, cyc, None) {
                                    out.push(l);
                                }
                            }
                        }
                    }
                }
            }
            // Quads a-b-c-d with a smallest and b < d.
            for (x, &b) in up.iter().enumerate() {
                for &d in &up[x + 1..] {
                    for &c in nbrs[b].iter().filter(|&&c| c > a && c != d && nbrs[d].contains(&c)) {
                        for &e1 in g.between(a, b) {
                            for &e2 in g.between(b, c) {
                                for &e3 in g.between(c, d) {
                                    for &e4 in g.between(d, a) {
                                        let cyc = vec![walk(g, e1, a), walk(g, e2, b), walk(g, e3, c), walk(g, e4, d)];
                                        if let Some(l) = accept(g, cyc, Some([(a, c), (b, d)])) {
                                            out.push(l);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            out
        })
        .collect()
}

fn accept(g: &AssemblyGraph, cyc: Vec<LoopEdge>, chords: Option<[(usize, usize); 2]>) -> Option<Loop> {
    if !is_closed(g, &cyc, &g.tol).ok()? {
        return None;
    }
    let l = Loop::from_cycle(g, cyc).ok()?;
    if let Some(chords) = chords {
        if chords.iter().any(|&(u, v)| has_consistent_chord(g, &l, u, v)) {
            return None;
        }
    }
    (!self_intersects(g, &l.poses)).then_some(l)
}

/// Why two loops could not be merged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MergeVerdict {
    NoCommonEdge,
    /// C1: a shared fragment is placed differently by the two loops.
    PoseConflict { vertex: usize },
    /// C1: the loops pick different candidates for the same fragment pair.
    RivalEdges { pair: (usize, usize) },
    /// C2: fragments from the two loops overlap.
    Intersection { a: usize, b: usize },
}

impl From<MergeVerdict> for Error {
    fn from(v: MergeVerdict) -> Self {
        match v {
            MergeVerdict::NoCommonEdge => Error::NotMergeable,
            other => Error::MalformedLoop(format!("{other:?}")),
        }
    }
}

/// Merges `lq` into `lp`'s frame, aligning the two on their first common
/// edge's source vertex.
pub fn merge_loops(g: &AssemblyGraph, lp: &Loop, lq: &Loop) -> std::result::Result<Loop, MergeVerdict> {
    let common = lp.ids.iter().find(|e| lq.contains_edge(**e)).ok_or(MergeVerdict::NoCommonEdge)?;
    let pivot = g.edges[*common].src;
    let gauge = lp.poses[&pivot] * lq.poses[&pivot].inverse();

    let chosen: BTreeMap<(usize, usize), usize> = lp.ids.iter().map(|&e| (g.edges[e].pair(), e)).collect();
    for &e in &lq.ids {
        let pair = g.edges[e].pair();
        if chosen.get(&pair).is_some_and(|&f| f != e) {
            return Err(MergeVerdict::RivalEdges { pair });
        }
    }
    for v in lp.vertices.intersection(&lq.vertices) {
        if !g.poses_agree(*v, &lp.poses[v], &(gauge * lq.poses[v])) {
            return Err(MergeVerdict::PoseConflict { vertex: *v });
        }
    }
    let added: Vec<(usize, RigidTransform2D)> = lq
        .vertices
        .difference(&lp.vertices)
        .map(|&v| (v, gauge * lq.poses[&v]))
        .collect();
    for a in lp.vertices.difference(&lq.vertices) {
        for (b, pb) in &added {
            if g.collide(*a, &lp.poses[a], *b, pb) {
                return Err(MergeVerdict::Intersection { a: *a, b: *b });
            }
        }
    }
    let mut poses = lp.poses.clone();
    poses.extend(added);
    let ids: Vec<usize> = lp.ids.iter().chain(&lq.ids).copied().collect::<BTreeSet<_>>().into_iter().collect();
    Ok(Loop {
        edges: ids.iter().map(|&e| LoopEdge::fwd(e)).collect(),
        vertices: poses.keys().copied().collect(),
        score: ids.iter().map(|&e| g.edges[e].gamma).sum(),
        poses,
        ids,
    })
}
