use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::RigidTransform2D;

use super::forest::Forest;
use super::graph::AssemblyGraph;
use super::loops::{find_induced_loops, is_closed, merge_loops, Loop, LoopEdge, LoopSet};
use super::ComposeConfig;

/// Best-first: accept edges in confidence order whenever they keep the
/// assembly intersection-free and consistent, until everything is joined.
pub(crate) fn best_first(g: &AssemblyGraph) -> Forest {
    let mut forest = Forest::singletons(g.num_vertices());
    forest.greedy(g, |_| true, true, true);
    forest
}

struct Dfs<'g, 'a> {
    g: &'g AssemblyGraph<'a>,
    /// Incident edges per vertex in confidence order.
    order: &'g [Vec<usize>],
    discarded: &'g [bool],
    max_len: usize,
    budget: usize,
}

impl Dfs<'_, '_> {
    fn grow(&mut self, path: &mut Vec<LoopEdge>, verts: &mut Vec<usize>, poses: &mut Vec<RigidTransform2D>) -> bool {
        let g = self.g;
        let (u, pu) = (*verts.last().unwrap(), *poses.last().unwrap());
        let order = self.order;
        for &e in &order[u] {
            if self.budget == 0 {
                return false;
            }
            self.budget -= 1;
            if self.discarded[e] || path.iter().any(|le| le.edge == e) {
                continue;
            }
            let w = g.other(e, u);
            let step = if g.edges[e].src == u { LoopEdge::fwd(e) } else { LoopEdge::rev(e) };
            if w == verts[0] {
                if path.len() >= 2 {
                    path.push(step);
                    return true;
                }
                continue;
            }
            if verts.contains(&w) || path.len() + 2 > self.max_len {
                continue;
            }
            let pw = pu * g.oriented(e, u);
            if verts.iter().zip(poses.iter()).any(|(&v, pv)| g.collide(v, pv, w, &pw)) {
                continue;
            }
            path.push(step);
            verts.push(w);
            poses.push(pw);
            if self.grow(path, verts, poses) {
                return true;
            }
            path.pop();
            verts.pop();
            poses.pop();
        }
        false
    }

    /// First loop reached from `start`, growing only through fragments that
    /// stay clear of the ones already on the path.
    fn first_loop(&mut self, start: usize) -> Option<Vec<LoopEdge>> {
        let c = &self.g.edges[start];
        let (p0, p1) = (RigidTransform2D::identity(), c.transform);
        if self.g.collide(c.src, &p0, c.dst, &p1) {
            return None;
        }
        let mut path = vec![LoopEdge::fwd(start)];
        let mut verts = vec![c.src, c.dst];
        let mut poses = vec![p0, p1];
        self.grow(&mut path, &mut verts, &mut poses).then_some(path)
    }
}

/// Greedy loop closing: DFS from seeded random start edges (each used at
/// most once); every closed loop that fits the assembly so far is fixed
/// and its edges' rivals discarded. Leftover fragments are then attached
/// greedily.
pub(crate) fn glc(g: &AssemblyGraph, cfg: &ComposeConfig) -> Forest {
    let m = g.edges.len();
    let mut forest = Forest::singletons(g.num_vertices());
    let mut discarded = vec![false; m];
    let mut starts: Vec<usize> = (0..m).collect();
    starts.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let order: Vec<Vec<usize>> = {
        let conf = g.by_confidence();
        let mut rank = vec![0; m];
        for (r, &e) in conf.iter().enumerate() {
            rank[e] = r;
        }
        (0..g.num_vertices())
            .map(|v| {
                let mut es = g.incident(v).to_vec();
                es.sort_by_key(|&e| rank[e]);
                es
            })
            .collect()
    };
    let max_steps = cfg.glc_steps_per_vertex * g.num_vertices();
    let mut steps = 0;
    for &start in &starts {
        if steps >= max_steps || forest.num_components() <= 1 {
            break;
        }
        if discarded[start] || forest.selected.contains(&start) {
            continue;
        }
        steps += 1;
        let found = Dfs {
            g,
            order: &order,
            discarded: &discarded,
            max_len: cfg.glc_max_loop,
            budget: cfg.dfs_budget,
        }
        .first_loop(start);
        let Some(cycle) = found else { continue };
        if !is_closed(g, &cycle, &g.tol).unwrap_or(false) {
            continue;
        }
        let Ok(l) = Loop::from_cycle(g, cycle) else { continue };
        if forest.try_fix(g, l.edge_ids(), &l.poses) {
            log::debug!("glc: fixed loop {:?}", l.edge_ids());
            for &e in l.edge_ids() {
                let c = &g.edges[e];
                for &r in g.between(c.src, c.dst) {
                    if r != e {
                        discarded[r] = true;
                    }
                }
            }
        }
    }
    forest.greedy(g, |e| !discarded[e], false, false);
    forest
}

/// Upper bound on exchange sweeps over the unselected edges.
const MAX_EXCHANGE_PASSES: usize = 4;

/// Rebuilds an assembly: `first` (if any), then the edges of `keep` in
/// confidence order, then everything else greedily; `banned` edges are
/// never used.
fn rebuild(g: &AssemblyGraph, order: &[usize], first: Option<usize>, keep: &Forest, banned: &[usize]) -> Option<Forest> {
    let mut f = Forest::singletons(g.num_vertices());
    if let Some(e) = first {
        if !f.try_edge(g, e, true) {
            return None;
        }
    }
    for &k in order.iter().filter(|&&k| keep.selected.contains(&k) && !banned.contains(&k)) {
        f.try_edge(g, k, true);
    }
    f.greedy(g, |x| !banned.contains(&x), false, false);
    Some(f)
}

/// Local search on the final selection. Three moves are tried: putting an
/// unselected edge first, banning a selected edge, and banning two
/// selected edges; each time the rest of the current selection is re-added
/// in confidence order and leftovers are attached greedily. A rebuild
/// replaces the assembly when it leaves out less penalty. This undoes
/// greedy choices that block better combinations, e.g. a confident wrong
/// edge whose placement collides with two correct ones.
fn exchange(g: &AssemblyGraph, mut forest: Forest) -> Forest {
    let mut cost = forest.dropped_penalty(g);
    let order = g.by_confidence();
    for _ in 0..MAX_EXCHANGE_PASSES {
        let mut improved = false;
        let mut moves: Vec<(Option<usize>, Vec<usize>)> = Vec::new();
        let chosen: Vec<usize> = order.iter().copied().filter(|e| forest.selected.contains(e)).collect();
        for &e in &order {
            if !forest.selected.contains(&e) {
                moves.push((Some(e), Vec::new()));
            }
        }
        for (n, &a) in chosen.iter().enumerate() {
            moves.push((None, vec![a]));
            for &b in &chosen[n + 1..] {
                moves.push((None, vec![a, b]));
            }
        }
        for (first, banned) in moves {
            let Some(f) = rebuild(g, &order, first, &forest, &banned) else {
                continue;
            };
            let c = f.dropped_penalty(g);
            if c < cost - 1e-9 {
                log::debug!("exchange ({first:?}, banned {banned:?}): dropped penalty {cost:.4} -> {c:.4}");
                forest = f;
                cost = c;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    forest
}

/// Diagnostics of a hierarchical merge run.
#[derive(Clone, Debug, Default)]
pub struct HlmTrace {
    pub loops: LoopSet,
    /// Merge attempts per bottom-up level.
    pub attempts: Vec<usize>,
    /// The loop all others were merged into, if any loop closed.
    pub best: Option<Loop>,
}

fn mergeable_pairs(level: &[Loop]) -> BTreeSet<(usize, usize)> {
    let mut by_edge: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (n, l) in level.iter().enumerate() {
        for &e in l.edge_ids() {
            by_edge.entry(e).or_default().push(n);
        }
    }
    let mut pairs = BTreeSet::new();
    for owners in by_edge.values() {
        for (x, &p) in owners.iter().enumerate() {
            for &q in &owners[x + 1..] {
                pairs.insert((p, q));
            }
        }
    }
    pairs
}

fn subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|e| b.binary_search(e).is_ok())
}

/// Highest score; ties go to the lexicographically smaller edge list.
fn best_loop(level: &[Loop]) -> Option<&Loop> {
    level.iter().min_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.edge_ids().cmp(b.edge_ids())))
}

/// Hierarchical loop merging: closed short loops are merged level by level
/// (at most `theta_m` attempts each), the best loop of the last level
/// absorbs whatever lower-level loops still fit, leftover fragments are
/// attached greedily and the result is improved by edge exchange.
pub(crate) fn hlm(g: &AssemblyGraph, cfg: &ComposeConfig) -> (Forest, HlmTrace) {
    let mut forest = Forest::singletons(g.num_vertices());
    let mut trace = HlmTrace::default();
    let level0 = find_induced_loops(g);
    if level0.is_empty() {
        log::info!("hlm: no closed loops; attaching fragments greedily");
        forest.greedy(g, |_| true, false, false);
        return (exchange(g, forest), trace);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    trace.loops.levels.push(level0);
    loop {
        let level = trace.loops.levels.last().unwrap();
        if level.len() < 2 {
            break;
        }
        let mut pairs: Vec<(usize, usize)> = mergeable_pairs(level)
            .into_iter()
            .filter(|&(p, q)| {
                let (a, b) = (level[p].edge_ids(), level[q].edge_ids());
                !subset(a, b) && !subset(b, a)
            })
            .collect();
        pairs.shuffle(&mut rng);
        pairs.sort_by(|&(a, b), &(c, d)| {
            (level[c].score + level[d].score).total_cmp(&(level[a].score + level[b].score))
        });
        pairs.truncate(cfg.theta_m);
        trace.attempts.push(pairs.len());
        let merged: Vec<Loop> = pairs
            .par_iter()
            .filter_map(|&(p, q)| merge_loops(g, &level[p], &level[q]).ok())
            .collect();
        let mut seen = BTreeSet::new();
        let next: Vec<Loop> = merged
            .into_iter()
            .filter(|l| seen.insert(l.edge_ids().to_vec()))
            .collect();
        if next.is_empty() {
            break;
        }
        trace.loops.levels.push(next);
    }
    let levels = &trace.loops.levels;
    let mut best = best_loop(levels.last().unwrap()).unwrap().clone();
    for level in levels[..levels.len() - 1].iter().rev() {
        let mut order: Vec<&Loop> = level.iter().collect();
        order.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.edge_ids().cmp(b.edge_ids())));
        for l in order {
            if l.vertices.is_subset(&best.vertices) {
                continue;
            }
            if let Ok(m) = merge_loops(g, &best, l) {
                best = m;
            }
        }
    }
    if !forest.try_fix(g, best.edge_ids(), &best.poses) {
        log::warn!("hlm: best loop overlaps itself after merging; using greedy attachment only");
    }
    forest.greedy(g, |_| true, false, false);
    trace.best = Some(best);
    (exchange(g, forest), trace)
}
