use std::collections::{BTreeMap, BTreeSet};

use crate::geometry::RigidTransform2D;

use super::graph::{edge_cost, AssemblyGraph};

/// Partial assembly: fragments grouped into rigid components, each with
/// poses in its own frame, plus the edges selected so far.
#[derive(Clone, Debug)]
pub(crate) struct Forest {
    /// Component label per vertex (the component's smallest vertex).
    comp: Vec<usize>,
    /// Pose of each vertex in its component's frame.
    pub poses: Vec<RigidTransform2D>,
    members: BTreeMap<usize, Vec<usize>>,
    pub selected: BTreeSet<usize>,
    pairs: BTreeSet<(usize, usize)>,
}

impl Forest {
    pub fn singletons(n: usize) -> Self {
        Self {
            comp: (0..n).collect(),
            poses: vec![RigidTransform2D::identity(); n],
            members: (0..n).map(|v| (v, vec![v])).collect(),
            selected: BTreeSet::new(),
            pairs: BTreeSet::new(),
        }
    }

    pub fn num_components(&self) -> usize {
        self.members.len()
    }

    pub fn pair_taken(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a.min(b), a.max(b)))
    }

    fn select(&mut self, g: &AssemblyGraph, e: usize) {
        self.selected.insert(e);
        self.pairs.insert(g.edges[e].pair());
    }

    /// Whether placing `placed` (vertex, pose in the frame of component
    /// `host`) collides with any member of `host` other than itself.
    fn collides_with(&self, g: &AssemblyGraph, host: usize, placed: &[(usize, RigidTransform2D)]) -> bool {
        let members = &self.members[&host];
        placed.iter().any(|(b, pb)| {
            members
                .iter()
                .any(|&a| a != *b && g.collide(a, &self.poses[a], *b, pb))
        })
    }

    /// Moves component `guest` into `host`'s frame via `gauge`.
    fn absorb(&mut self, host: usize, guest: usize, gauge: &RigidTransform2D) {
        let moved = self.members.remove(&guest).expect("guest component exists");
        for &v in &moved {
            self.poses[v] = *gauge * self.poses[v];
        }
        let mut all = self.members.remove(&host).expect("host component exists");
        all.extend(moved);
        all.sort_unstable();
        let label = all[0];
        for &v in &all {
            self.comp[v] = label;
        }
        self.members.insert(label, all);
    }

    /// Tries to join two components through edge `e`; fails on collision
    /// or when its pair already has a selected edge. An edge inside one
    /// component is accepted only if `internal` is set and it agrees with
    /// the current poses.
    pub fn try_edge(&mut self, g: &AssemblyGraph, e: usize, internal: bool) -> bool {
        let c = &g.edges[e];
        if self.pair_taken(c.src, c.dst) {
            return false;
        }
        let (cu, cv) = (self.comp[c.src], self.comp[c.dst]);
        if cu == cv {
            let predicted = self.poses[c.src] * c.transform;
            if internal && g.poses_agree(c.dst, &predicted, &self.poses[c.dst]) {
                self.select(g, e);
                return true;
            }
            return false;
        }
        let gauge = self.poses[c.src] * c.transform * self.poses[c.dst].inverse();
        let placed: Vec<(usize, RigidTransform2D)> = self.members[&cv]
            .iter()
            .map(|&v| (v, gauge * self.poses[v]))
            .collect();
        if self.collides_with(g, cu, &placed) {
            return false;
        }
        self.absorb(cu, cv, &gauge);
        self.select(g, e);
        true
    }

    /// Fixes a consistent edge set with its poses (e.g. a closed loop or a
    /// merged loop set). Every component it touches must agree with those
    /// poses at all shared fragments and stay clear of the rest.
    pub fn try_fix(
        &mut self,
        g: &AssemblyGraph,
        edges: &[usize],
        poses: &BTreeMap<usize, RigidTransform2D>,
    ) -> bool {
        if edges.iter().any(|&e| {
            let c = &g.edges[e];
            self.pair_taken(c.src, c.dst) && !self.selected.contains(&e)
        }) {
            return false;
        }
        // Everything is placed in the frame of `poses`.
        let mut placed: BTreeMap<usize, RigidTransform2D> = poses.clone();
        let touched: BTreeSet<usize> = poses.keys().map(|&v| self.comp[v]).collect();
        for &c in &touched {
            let members = &self.members[&c];
            let Some(&pivot) = members.iter().find(|v| poses.contains_key(v)) else {
                continue;
            };
            let gauge = poses[&pivot] * self.poses[pivot].inverse();
            for &v in members {
                let p = gauge * self.poses[v];
                match placed.get(&v) {
                    Some(q) if poses.contains_key(&v) => {
                        if !g.poses_agree(v, q, &p) {
                            return false;
                        }
                    }
                    _ => {
                        placed.insert(v, p);
                    }
                }
            }
        }
        // Pairs inside one existing component were checked when it formed.
        let items: Vec<(&usize, &RigidTransform2D)> = placed.iter().collect();
        for (n, (a, pa)) in items.iter().enumerate() {
            for (b, pb) in &items[n + 1..] {
                if self.comp[**a] != self.comp[**b] && g.collide(**a, pa, **b, pb) {
                    return false;
                }
            }
        }
        for (&v, p) in &placed {
            self.poses[v] = *p;
        }
        let comps: Vec<usize> = touched.into_iter().collect();
        for &c in &comps[1..] {
            let label = self.comp[comps[0]];
            self.absorb(label, c, &RigidTransform2D::identity());
        }
        for &e in edges {
            self.select(g, e);
        }
        true
    }

    /// Greedy attachment in confidence order over edges passing `allowed`.
    pub fn greedy(&mut self, g: &AssemblyGraph, allowed: impl Fn(usize) -> bool, internal: bool, stop_when_connected: bool) {
        for e in g.by_confidence() {
            if stop_when_connected && self.num_components() == 1 {
                break;
            }
            if allowed(e) && !self.selected.contains(&e) {
                self.try_edge(g, e, internal);
            }
        }
    }

    /// Selects unselected edges inside a component whose pose cost is
    /// below their penalty, on pairs without a selected edge; each such
    /// switch lowers the objective at the current poses.
    pub fn add_cheap_edges(&mut self, g: &AssemblyGraph, poses: &BTreeMap<usize, RigidTransform2D>) -> usize {
        let mut added = 0;
        for e in g.by_confidence() {
            let c = &g.edges[e];
            if self.selected.contains(&e) || self.pair_taken(c.src, c.dst) || self.comp[c.src] != self.comp[c.dst] {
                continue;
            }
            if edge_cost(&c.transform, &poses[&c.src], &poses[&c.dst]) < g.penalty(e) {
                self.select(g, e);
                added += 1;
            }
        }
        added
    }

    /// Penalty of the edges left out once every internal edge that agrees
    /// with the current poses (within tolerance) has been taken. Selected
    /// edges are consistent and collision-free by construction, so this is
    /// the assembly cost with consistency as a constraint; unlike the
    /// pose-graph objective it does not punish a loop for closing a pixel
    /// or two short.
    pub fn dropped_penalty(&self, g: &AssemblyGraph) -> f64 {
        let mut f = self.clone();
        for e in g.by_confidence() {
            let c = &g.edges[e];
            if f.comp[c.src] == f.comp[c.dst] && !f.selected.contains(&e) {
                f.try_edge(g, e, true);
            }
        }
        (0..g.edges.len())
            .filter(|e| !f.selected.contains(e))
            .fold(0.0, |acc, e| acc + g.penalty(e))
    }

    /// Components, each ascending, in order of their smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        self.members.values().cloned().collect()
    }
}
