//! Hand-built assembly graphs over square tiles, and an exhaustive
//! minimiser of the assembly objective to check solvers against.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use image::{Rgba, RgbaImage};
use reassembly::composition::{objective, refine_poses, AssemblyGraph, Tolerance};
use reassembly::geometry::{Fragment, OutlineParams, RigidTransform2D};
use reassembly::pairwise::AlignmentCandidate;

pub const SIDE: u32 = 40;

/// A layout of equal square tiles: `cells[v]` is the grid cell of fragment
/// `v`, so its true pose is a translation by `SIDE` times the cell.
pub struct Tiles {
    pub fragments: Vec<Fragment>,
    pub cells: Vec<(i32, i32)>,
}

impl Tiles {
    pub fn new(cells: Vec<(i32, i32)>) -> Self {
        let fragments = (0..cells.len())
            .map(|id| {
                let shade = 40 + (id as u8).wrapping_mul(23);
                let img = RgbaImage::from_pixel(SIDE, SIDE, Rgba([shade, 255 - shade, 128, 255]));
                Fragment::new(id, img, &OutlineParams::default()).unwrap()
            })
            .collect();
        Self { fragments, cells }
    }

    pub fn pose(&self, v: usize) -> RigidTransform2D {
        cell_pose(self.cells[v])
    }

    /// Groundtruth placement of `j` in `i`'s frame.
    pub fn truth(&self, i: usize, j: usize) -> RigidTransform2D {
        self.pose(i).inverse() * self.pose(j)
    }

    pub fn correct(&self, i: usize, j: usize, k: usize, gamma: f64) -> AlignmentCandidate {
        edge(i, j, k, self.truth(i, j), gamma)
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance::for_diagonal(SIDE as f64 * 3.0 * 2f64.sqrt())
    }

    pub fn graph(&self, edges: Vec<AlignmentCandidate>) -> AssemblyGraph<'_> {
        AssemblyGraph::new(&self.fragments, edges, self.tolerance()).unwrap()
    }

    /// Whether `poses` (in any frame) place every fragment of `vs` where it
    /// belongs relative to the first one.
    pub fn layout_matches(&self, poses: &BTreeMap<usize, RigidTransform2D>, vs: &[usize]) -> bool {
        let a = vs[0];
        vs.iter().all(|&v| {
            let got = poses[&a].inverse() * poses[&v];
            let want = self.truth(a, v);
            let (da, dt) = got.distance_at(&want, self.fragments[v].centroid);
            da < 1e-6 && dt < 1e-6
        })
    }
}

pub fn cell_pose((c, r): (i32, i32)) -> RigidTransform2D {
    RigidTransform2D::translation(SIDE as f64 * c as f64, SIDE as f64 * r as f64)
}

pub fn edge(src: usize, dst: usize, k: usize, t: RigidTransform2D, gamma: f64) -> AlignmentCandidate {
    AlignmentCandidate {
        src,
        dst,
        k,
        transform: t,
        raw_score: 0,
        gamma,
        roi: [0.0; 4],
    }
}

/// Poses for a selection: each component chained outwards from its
/// smallest vertex along the selected edges, then refined when the
/// selection has cycles.
pub fn selection_poses(g: &AssemblyGraph, sel: &[usize]) -> BTreeMap<usize, RigidTransform2D> {
    let n = g.num_vertices();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &e in sel {
        adj[g.edges[e].src].push(e);
        adj[g.edges[e].dst].push(e);
    }
    let mut poses: BTreeMap<usize, RigidTransform2D> = BTreeMap::new();
    let mut tree_edges = 0;
    for root in 0..n {
        if poses.contains_key(&root) {
            continue;
        }
        poses.insert(root, RigidTransform2D::identity());
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &e in &adj[u] {
                let w = g.other(e, u);
                if !poses.contains_key(&w) {
                    let p = poses[&u] * g.oriented(e, u);
                    poses.insert(w, p);
                    tree_edges += 1;
                    queue.push_back(w);
                }
            }
        }
    }
    if sel.len() > tree_edges {
        poses = refine_poses(g, sel, &poses).unwrap().poses;
    }
    poses
}

/// Minimum of the objective over every selection with at most one edge
/// per fragment pair, with its indicator vector.
pub fn brute_force(g: &AssemblyGraph) -> (f64, Vec<bool>) {
    let pairs: Vec<Vec<usize>> = g.pairs().map(|(_, es)| es.clone()).collect();
    let mut choice = vec![0usize; pairs.len()];
    let mut best = (f64::INFINITY, vec![false; g.edges.len()]);
    loop {
        let sel: Vec<usize> = pairs
            .iter()
            .zip(&choice)
            .filter(|(_, &c)| c > 0)
            .map(|(es, &c)| es[c - 1])
            .collect();
        let mut u = vec![false; g.edges.len()];
        for &e in &sel {
            u[e] = true;
        }
        let poses = selection_poses(g, &sel);
        let v = objective(g, &poses, &u).unwrap();
        if v < best.0 {
            best = (v, u);
        }
        // Mixed-radix increment.
        let mut i = 0;
        loop {
            if i == pairs.len() {
                return best;
            }
            choice[i] += 1;
            if choice[i] <= pairs[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Indicator vector of a result's selected edges over `g`.
pub fn indicators(g: &AssemblyGraph, selected: &[AlignmentCandidate]) -> Vec<bool> {
    g.edges.iter().map(|e| selected.iter().any(|s| s.key() == e.key())).collect()
}

pub fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs()))
}

/// A random multi-graph over up to `max_vertices` tiles forming a connected
/// region of a 3x3 grid:
/// groundtruth edges between most side-adjacent tiles plus a few wrong
/// candidates, at most `max_edges` in total. Scores are drawn from
/// `[0.5, 1)`, the range that survives the default detector threshold.
pub fn random_tiles<R: rand::Rng>(rng: &mut R, max_vertices: usize, max_edges: usize) -> (Tiles, Vec<AlignmentCandidate>) {
    use rand::seq::SliceRandom;
    // Fragments of one image cover a connected region: grow one cell at a
    // time from a random start.
    let n = rng.gen_range(3..=max_vertices.min(9));
    let mut cells = vec![(rng.gen_range(0..3), rng.gen_range(0..3))];
    while cells.len() < n {
        let &(c, r) = cells.choose(rng).unwrap();
        let (dc, dr) = *[(1, 0), (-1, 0), (0, 1), (0, -1)].choose(rng).unwrap();
        let next = (c + dc, r + dr);
        if (0..3).contains(&next.0) && (0..3).contains(&next.1) && !cells.contains(&next) {
            cells.push(next);
        }
    }
    cells.shuffle(rng);
    let tiles = Tiles::new(cells);
    let mut edges = Vec::new();
    let mut next_k: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut push = |edges: &mut Vec<AlignmentCandidate>, i: usize, j: usize, t: RigidTransform2D, gamma: f64| {
        let k = next_k.entry((i, j)).or_insert(0);
        edges.push(edge(i, j, *k, t, gamma));
        *k += 1;
    };
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (tiles.cells[i], tiles.cells[j]);
            let adjacent = (a.0 - b.0).abs() + (a.1 - b.1).abs() == 1;
            if i < j && adjacent && rng.gen_bool(0.85) {
                let (s, d) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
                let gamma = rng.gen_range(0.5..1.0);
                push(&mut edges, s, d, tiles.truth(s, d), gamma);
            }
        }
    }
    edges.shuffle(rng);
    edges.truncate(max_edges.saturating_sub(1));
    let wrong = rng.gen_range(1..=4).min(max_edges - edges.len());
    for _ in 0..wrong {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let (dx, dy) = loop {
            let d = (rng.gen_range(-2..=2), rng.gen_range(-2..=2));
            if d != (0, 0) {
                break d;
            }
        };
        let centre = nalgebra::Vector2::new(SIDE as f64 / 2.0, SIDE as f64 / 2.0);
        let turn = RigidTransform2D::rotation_about(std::f64::consts::FRAC_PI_2 * rng.gen_range(0..4) as f64, centre);
        let t = cell_pose((dx, dy)) * turn;
        let gamma = rng.gen_range(0.5..1.0);
        push(&mut edges, i, j, t, gamma);
    }
    (tiles, edges)
}

/// Isolated tiles parked far from the fixture.
pub fn parked(id: usize) -> (i32, i32) {
    (10 + 2 * id as i32, 10)
}

/// The false-loop scenario: a square 4 6 / 9 8 and a second square 6 5 /
/// 8 7 are correct; 5 -> 8 -> 9 -> 5 closes on its own with more confident
/// but wrong candidates, one of them a rival of the correct 8 -> 9.
pub fn eleven() -> (Tiles, Vec<AlignmentCandidate>) {
    let mut cells: Vec<(i32, i32)> = (0..10).map(parked).collect();
    cells[4] = (0, 0);
    cells[6] = (1, 0);
    cells[5] = (2, 0);
    cells[9] = (0, 1);
    cells[8] = (1, 1);
    cells[7] = (2, 1);
    let t = Tiles::new(cells);
    let edges = vec![
        t.correct(4, 6, 0, 0.6),
        t.correct(6, 8, 0, 0.6),
        t.correct(8, 9, 0, 0.6),
        t.correct(9, 4, 0, 0.6),
        t.correct(6, 5, 0, 0.6),
        t.correct(5, 7, 0, 0.6),
        t.correct(7, 8, 0, 0.6),
        edge(5, 8, 0, cell_pose((0, 1)), 0.7),
        edge(8, 9, 1, cell_pose((1, 0)), 0.7),
        edge(9, 5, 0, cell_pose((-1, -1)), 0.7),
    ];
    (t, edges)
}

pub const FALSE_LOOP: [(usize, usize, usize); 3] = [(5, 8, 0), (8, 9, 1), (9, 5, 0)];
pub const CORRECT: [usize; 6] = [4, 5, 6, 7, 8, 9];

/// Seed under which GLC's first closed loop is the false one.
pub const GLC_FALSE_FIRST_SEED: u64 = 0;
