mod common;

use std::collections::{BTreeMap, BTreeSet};

use approx::assert_abs_diff_eq;
use common::*;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reassembly::composition::*;
use reassembly::geometry::RigidTransform2D;
use reassembly::Error;

/// Grid graph of the induced-loop example: 2 5 / 7 6, with the diagonal
/// 5-7 as a chord of the square 2-5-6-7.
fn six_b() -> Tiles {
    let mut cells: Vec<(i32, i32)> = (0..8).map(parked).collect();
    cells[2] = (0, 0);
    cells[5] = (1, 0);
    cells[6] = (1, 1);
    cells[7] = (0, 1);
    Tiles::new(cells)
}

fn loop_vertex_sets(loops: &[Loop]) -> BTreeSet<Vec<usize>> {
    loops.iter().map(|l| l.vertices.iter().copied().collect()).collect()
}

#[test]
fn induced_loops_skip_squares_with_a_consistent_chord() {
    let t = six_b();
    let g = t.graph(vec![
        t.correct(2, 5, 0, 0.9),
        t.correct(5, 7, 0, 0.9),
        t.correct(7, 2, 0, 0.9),
        t.correct(5, 6, 0, 0.9),
        t.correct(6, 7, 0, 0.9),
    ]);
    let loops = find_induced_loops(&g);
    assert_eq!(loop_vertex_sets(&loops), BTreeSet::from([vec![2, 5, 7], vec![5, 6, 7]]));
    for l in &loops {
        assert!(t.layout_matches(&l.poses, &l.vertices.iter().copied().collect::<Vec<_>>()));
    }
}

#[test]
fn an_inconsistent_chord_leaves_the_square_induced() {
    let t = six_b();
    let g = t.graph(vec![
        t.correct(2, 5, 0, 0.9),
        edge(5, 7, 0, RigidTransform2D::translation(0.0, 80.0), 0.9),
        t.correct(7, 2, 0, 0.9),
        t.correct(5, 6, 0, 0.9),
        t.correct(6, 7, 0, 0.9),
    ]);
    let loops = find_induced_loops(&g);
    assert_eq!(loop_vertex_sets(&loops), BTreeSet::from([vec![2, 5, 6, 7]]));
    assert_eq!(loops[0].len(), 4);
}

#[test]
fn parallel_candidates_yield_only_the_consistent_triangle() {
    let t = Tiles::new(vec![(0, 0), (1, 0), (0, 1)]);
    let g = t.graph(vec![
        t.correct(0, 1, 0, 0.8),
        edge(0, 1, 1, RigidTransform2D::translation(40.0, 7.0), 0.9),
        t.correct(1, 2, 0, 0.8),
        t.correct(2, 0, 0, 0.8),
    ]);
    let loops = find_induced_loops(&g);
    assert_eq!(loops.len(), 1);
    let used: Vec<(usize, usize, usize)> = loops[0].edge_ids().iter().map(|&e| g.edges[e].key()).collect();
    assert!(used.contains(&(0, 1, 0)) && !used.contains(&(0, 1, 1)));
    assert_abs_diff_eq!(loops[0].score, 2.4, epsilon = 1e-12);
}

#[test]
fn no_loops_without_closed_cycles() {
    let t = six_b();
    let g = t.graph(vec![t.correct(2, 5, 0, 0.9), t.correct(5, 6, 0, 0.9), t.correct(6, 7, 0, 0.9)]);
    assert!(find_induced_loops(&g).is_empty());
    let g = t.graph(vec![
        t.correct(2, 5, 0, 0.9),
        t.correct(5, 7, 0, 0.9),
        edge(7, 2, 0, RigidTransform2D::translation(3.0, -40.0), 0.9),
    ]);
    assert!(find_induced_loops(&g).is_empty());
}

#[test]
fn loop_residual_and_closure_boundary() {
    let t = six_b();
    let exact = t.graph(vec![t.correct(2, 5, 0, 0.9), t.correct(5, 7, 0, 0.9), t.correct(7, 2, 0, 0.9)]);
    let tri = [LoopEdge::fwd(0), LoopEdge::fwd(1), LoopEdge::rev(2)];
    // Edges sort as (2,5), (5,7), (7,2): walk 2 -> 5 -> 7 -> 2.
    let tri = vec![tri[0], tri[1], LoopEdge::fwd(2)];
    let (a, d) = loop_residual(&exact, &tri).unwrap();
    assert!(a < 1e-12 && d < 1e-9);
    assert!(is_closed(&exact, &tri, &exact.tol).unwrap());

    let turn = RigidTransform2D::rotation(5f64.to_radians());
    let shift = RigidTransform2D::translation(3.0, 4.0);
    let bent = t.graph(vec![
        t.correct(2, 5, 0, 0.9),
        t.correct(5, 7, 0, 0.9),
        edge(7, 2, 0, t.truth(7, 2) * turn * shift, 0.9),
    ]);
    let (a, d) = loop_residual(&bent, &tri).unwrap();
    assert_abs_diff_eq!(a.to_degrees(), 5.0, epsilon = 1e-9);
    assert_abs_diff_eq!(d, 5.0, epsilon = 1e-9);

    let at = Tolerance { angle: a, trans: d };
    assert!(is_closed(&bent, &tri, &at).unwrap());
    let under = Tolerance { angle: a * (1.0 - 1e-9), trans: d };
    assert!(!is_closed(&bent, &tri, &under).unwrap());
    assert!(!is_closed(&bent, &tri, &bent.tol).unwrap());
}

#[test]
fn malformed_chains_are_rejected() {
    let t = six_b();
    let g = t.graph(vec![t.correct(2, 5, 0, 0.9), t.correct(5, 7, 0, 0.9), t.correct(7, 2, 0, 0.9)]);
    for bad in [
        vec![LoopEdge::fwd(0)],
        vec![LoopEdge::fwd(0), LoopEdge::fwd(2)],
        vec![LoopEdge::fwd(0), LoopEdge::fwd(1)],
        vec![LoopEdge::fwd(0), LoopEdge::fwd(1), LoopEdge::fwd(9)],
    ] {
        assert!(matches!(loop_residual(&g, &bad), Err(Error::MalformedLoop(_))), "{bad:?}");
        assert!(matches!(Loop::from_cycle(&g, bad), Err(Error::MalformedLoop(_))));
    }
}

/// Two squares sharing the edge 2 -> 5: 1 2 3 / 4 5 6, plus a spare tile 7.
fn ten() -> Tiles {
    let mut cells: Vec<(i32, i32)> = (0..8).map(parked).collect();
    cells[1] = (0, 0);
    cells[2] = (1, 0);
    cells[3] = (2, 0);
    cells[4] = (0, 1);
    cells[5] = (1, 1);
    cells[6] = (2, 1);
    Tiles::new(cells)
}

fn ten_edges(t: &Tiles) -> Vec<reassembly::pairwise::AlignmentCandidate> {
    vec![
        t.correct(1, 2, 0, 0.9),
        t.correct(2, 5, 0, 0.8),
        t.correct(5, 4, 0, 0.7),
        t.correct(4, 1, 0, 0.9),
        t.correct(2, 3, 0, 0.6),
        t.correct(3, 6, 0, 0.9),
        t.correct(6, 5, 0, 0.5),
    ]
}

fn find(g: &AssemblyGraph, key: (usize, usize, usize)) -> usize {
    g.edges.iter().position(|e| e.key() == key).unwrap()
}

/// Loop through the given `(src, dst, k)` keys in walking order.
fn walk(g: &AssemblyGraph, keys: &[(usize, usize, usize)], from: usize) -> Loop {
    let mut at = from;
    let mut edges = Vec::new();
    for &key in keys {
        let e = find(g, key);
        if g.edges[e].src == at {
            edges.push(LoopEdge::fwd(e));
            at = g.edges[e].dst;
        } else {
            edges.push(LoopEdge::rev(e));
            at = g.edges[e].src;
        }
    }
    Loop::from_cycle(g, edges).unwrap()
}

#[test]
fn merging_two_squares_adds_their_union() {
    let t = ten();
    let g = t.graph(ten_edges(&t));
    let loops = find_induced_loops(&g);
    assert_eq!(loop_vertex_sets(&loops), BTreeSet::from([vec![1, 2, 4, 5], vec![2, 3, 5, 6]]));
    let (a, b) = (&loops[0], &loops[1]);
    let m = merge_loops(&g, a, b).unwrap();
    assert_eq!(m.vertices, (1..=6).collect());
    assert_eq!(m.edge_ids(), (0..7).collect::<Vec<_>>());
    assert_abs_diff_eq!(m.score, 0.9 + 0.8 + 0.7 + 0.9 + 0.6 + 0.9 + 0.5, epsilon = 1e-12);
    assert!(t.layout_matches(&m.poses, &[1, 2, 3, 4, 5, 6]));
    let n = merge_loops(&g, b, a).unwrap();
    assert_eq!(n.edge_ids(), m.edge_ids());
    assert!(t.layout_matches(&n.poses, &[1, 2, 3, 4, 5, 6]));
}

#[test]
fn merge_needs_a_common_edge() {
    let t = ten();
    let mut edges = ten_edges(&t);
    edges.push(t.correct(2, 5, 1, 0.3));
    let g = t.graph(edges);
    let a = walk(&g, &[(1, 2, 0), (2, 5, 0), (5, 4, 0), (4, 1, 0)], 1);
    let b = walk(&g, &[(2, 3, 0), (3, 6, 0), (6, 5, 0), (2, 5, 1)], 2);
    assert_eq!(merge_loops(&g, &a, &b), Err(MergeVerdict::NoCommonEdge));
    assert!(matches!(Error::from(MergeVerdict::NoCommonEdge), Error::NotMergeable));
}

#[test]
fn merge_rejects_rival_candidates() {
    let t = ten();
    let mut edges = ten_edges(&t);
    edges.push(edge(2, 5, 1, t.truth(2, 5) * RigidTransform2D::translation(0.5, 0.0), 0.95));
    let g = t.graph(edges);
    let a = walk(&g, &[(1, 2, 0), (2, 5, 0), (5, 4, 0), (4, 1, 0)], 1);
    let rival = walk(&g, &[(1, 2, 0), (2, 5, 1), (5, 4, 0), (4, 1, 0)], 1);
    assert_eq!(merge_loops(&g, &a, &rival), Err(MergeVerdict::RivalEdges { pair: (2, 5) }));
}

#[test]
fn merge_rejects_conflicting_poses() {
    let t = ten();
    // A loop through 1 -> 2 that puts 4 two tiles left of 1.
    let p: BTreeMap<usize, RigidTransform2D> = [
        (1, cell_pose((0, 0))),
        (2, cell_pose((1, 0))),
        (4, cell_pose((-2, 0))),
        (6, cell_pose((-2, -2))),
    ]
    .into();
    let rel = |a: usize, b: usize| p[&a].inverse() * p[&b];
    let mut edges = ten_edges(&t);
    edges.push(edge(2, 4, 0, rel(2, 4), 0.5));
    edges.push(edge(4, 6, 0, rel(4, 6), 0.5));
    edges.push(edge(6, 1, 0, rel(6, 1), 0.5));
    let g = t.graph(edges);
    let a = walk(&g, &[(1, 2, 0), (2, 5, 0), (5, 4, 0), (4, 1, 0)], 1);
    let q = walk(&g, &[(1, 2, 0), (2, 4, 0), (4, 6, 0), (6, 1, 0)], 1);
    assert_eq!(merge_loops(&g, &a, &q), Err(MergeVerdict::PoseConflict { vertex: 4 }));
}

#[test]
fn merge_rejects_overlapping_fragments() {
    let t = ten();
    // 7 sits where 4 belongs.
    let p7 = cell_pose((0, 1));
    let mut edges = ten_edges(&t);
    edges.push(edge(2, 7, 0, cell_pose((1, 0)).inverse() * p7, 0.5));
    edges.push(edge(7, 1, 0, p7.inverse(), 0.5));
    let g = t.graph(edges);
    let a = walk(&g, &[(1, 2, 0), (2, 5, 0), (5, 4, 0), (4, 1, 0)], 1);
    let q = walk(&g, &[(1, 2, 0), (2, 7, 0), (7, 1, 0)], 1);
    assert_eq!(merge_loops(&g, &a, &q), Err(MergeVerdict::Intersection { a: 4, b: 7 }));
}

#[test]
fn objective_terms() {
    let t = six_b();
    let mut edges = vec![
        t.correct(2, 5, 0, 0.9),
        t.correct(5, 7, 0, 0.8),
        t.correct(7, 2, 0, 0.7),
        t.correct(5, 6, 0, 0.6),
        t.correct(6, 7, 0, 0.5),
    ];
    edges.push(edge(2, 5, 1, RigidTransform2D::new(0.3, 40.0, -5.0), 0.4));
    let g = t.graph(edges);
    let wrong = find(&g, (2, 5, 1));
    let right = find(&g, (2, 5, 0));
    let gt: BTreeMap<usize, RigidTransform2D> = (0..8).map(|v| (v, t.pose(v))).collect();

    let none = vec![false; g.edges.len()];
    assert_abs_diff_eq!(objective(&g, &gt, &none).unwrap(), 0.9 + 0.8 + 0.7 + 0.6 + 0.5 + 0.4, epsilon = 1e-12);

    let mut all_correct = vec![true; g.edges.len()];
    all_correct[wrong] = false;
    assert_abs_diff_eq!(objective(&g, &gt, &all_correct).unwrap(), 0.4, epsilon = 1e-9);

    let mut swapped = all_correct.clone();
    swapped[wrong] = true;
    swapped[right] = false;
    let sel: Vec<usize> = (0..g.edges.len()).filter(|&e| swapped[e]).collect();
    let poses = selection_poses(&g, &sel);
    let v = objective(&g, &poses, &swapped).unwrap();
    assert!(v > 0.4 + 1e-6, "{v}");

    let both = vec![true; g.edges.len()];
    assert!(matches!(objective(&g, &gt, &both), Err(Error::InvalidInput(_))));
    assert!(matches!(objective(&g, &gt, &[true]), Err(Error::InvalidInput(_))));
    let mut partial = gt.clone();
    partial.remove(&6);
    assert!(matches!(objective(&g, &partial, &all_correct), Err(Error::InvalidInput(_))));

    let mut stacked = gt.clone();
    stacked.insert(6, t.pose(5));
    let mut u = none.clone();
    u[find(&g, (5, 6, 0))] = true;
    assert_eq!(objective(&g, &stacked, &u).unwrap(), f64::INFINITY);
}

#[test]
fn edge_cost_is_squared_error() {
    let t = RigidTransform2D::new(0.2, 3.0, -1.0);
    let xi = RigidTransform2D::new(-0.4, 10.0, 5.0);
    let xj = xi * t;
    assert!(edge_cost(&t, &xi, &xj) < 1e-20);
    let xj = xi * t * RigidTransform2D::new(0.1, 2.0, 0.0);
    let e = edge_error(&t, &xi, &xj);
    assert_abs_diff_eq!(e[2], 0.1, epsilon = 1e-12);
    assert_abs_diff_eq!(edge_cost(&t, &xi, &xj), e.norm_squared(), epsilon = 1e-12);
    assert_abs_diff_eq!(edge_cost(&t, &xi, &xj), 4.0 + 0.01, epsilon = 1e-9);
}

#[test]
fn jacobians_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    for _ in 0..50 {
        let mut r = |s: f64| rng.gen_range(-s..s);
        let t = RigidTransform2D::new(r(3.0), r(50.0), r(50.0));
        let xi = RigidTransform2D::new(r(3.0), r(100.0), r(100.0));
        let xj = RigidTransform2D::new(r(3.0), r(100.0), r(100.0));
        let (ji, jj) = edge_jacobians(&t, &xi, &xj);
        let bump = |x: &RigidTransform2D, k: usize, d: f64| {
            let v = Vector3::new(x.tx, x.ty, x.theta) + Vector3::ith(k, d);
            RigidTransform2D::new(v[2], v[0], v[1])
        };
        for k in 0..3 {
            let num_i = (edge_error(&t, &bump(&xi, k, h), &xj) - edge_error(&t, &bump(&xi, k, -h), &xj)) / (2.0 * h);
            let num_j = (edge_error(&t, &xi, &bump(&xj, k, h)) - edge_error(&t, &xi, &bump(&xj, k, -h))) / (2.0 * h);
            for r in 0..3 {
                assert_abs_diff_eq!(ji[(r, k)], num_i[r], epsilon = 1e-5);
                assert_abs_diff_eq!(jj[(r, k)], num_j[r], epsilon = 1e-5);
            }
        }
    }
}

fn square() -> Tiles {
    Tiles::new(vec![(0, 0), (1, 0), (1, 1), (0, 1)])
}

#[test]
fn refinement_fits_a_chain_exactly() {
    let t = square();
    let g = t.graph(vec![t.correct(0, 1, 0, 0.9), t.correct(1, 2, 0, 0.9), t.correct(2, 3, 0, 0.9)]);
    let start: BTreeMap<usize, RigidTransform2D> = (0..4)
        .map(|v| (v, t.pose(v) * RigidTransform2D::new(0.05 * v as f64, 3.0 * v as f64, -2.0)))
        .collect();
    let r = refine_poses(&g, &[0, 1, 2], &start).unwrap();
    assert!(r.history[0] > 1.0);
    assert!(*r.history.last().unwrap() < 1e-12);
    assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(r.poses[&0], start[&0]);
    assert!(t.layout_matches(&r.poses, &[0, 1, 2, 3]));
}

#[test]
fn refinement_leaves_consistent_poses_alone() {
    let t = square();
    let g = t.graph((0..4).map(|v| t.correct(v, (v + 1) % 4, 0, 0.9)).collect());
    let gt: BTreeMap<usize, RigidTransform2D> = (0..4).map(|v| (v, t.pose(v))).collect();
    let r = refine_poses(&g, &[0, 1, 2, 3], &gt).unwrap();
    for v in 0..4 {
        let (da, dt) = r.poses[&v].distance_at(&gt[&v], t.fragments[v].centroid);
        assert!(da < 1e-12 && dt < 1e-9);
    }
}

#[test]
fn refinement_spreads_a_bent_edge() {
    let t = square();
    let bent = edge(0, 1, 0, t.truth(0, 1) * RigidTransform2D::rotation(1f64.to_radians()), 0.9);
    let mut edges = vec![bent];
    edges.extend((1..4).map(|v| t.correct(v, (v + 1) % 4, 0, 0.9)));
    let g = t.graph(edges);
    let cycle: Vec<LoopEdge> = (0..4).map(LoopEdge::fwd).collect();
    let chained = Loop::from_cycle(&g, cycle).unwrap().poses;
    let r = refine_poses(&g, &[0, 1, 2, 3], &chained).unwrap();
    assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    assert!(r.history.last().unwrap() < &r.history[0]);
    let worst = |p: &BTreeMap<usize, RigidTransform2D>| {
        (0..4)
            .map(|v| reassembly::geometry::wrap_angle(p[&v].theta - t.pose(v).theta).abs().to_degrees())
            .fold(0.0, f64::max)
    };
    assert_abs_diff_eq!(worst(&chained), 1.0, epsilon = 1e-9);
    assert!(worst(&r.poses) < 1.0, "{}", worst(&r.poses));
}

#[test]
fn refinement_rejects_bad_input() {
    let t = square();
    let g = t.graph(vec![t.correct(0, 1, 0, 0.9)]);
    let gt: BTreeMap<usize, RigidTransform2D> = (0..4).map(|v| (v, t.pose(v))).collect();
    assert!(matches!(refine_poses(&g, &[3], &gt), Err(Error::InvalidInput(_))));
    let mut partial = gt.clone();
    partial.remove(&1);
    assert!(matches!(refine_poses(&g, &[0], &partial), Err(Error::InvalidInput(_))));
}

fn cfg(seed: u64) -> ComposeConfig {
    ComposeConfig {
        seed,
        ..Default::default()
    }
}

#[test]
fn best_first_takes_a_confident_wrong_edge() {
    let t = square();
    let mut edges: Vec<_> = (0..4).map(|v| t.correct(v, (v + 1) % 4, 0, 0.8)).collect();
    // 2 placed two tiles right of 0 instead of diagonally below.
    edges.push(edge(0, 2, 0, cell_pose((2, 0)), 0.95));
    let g = t.graph(edges);
    let bf = compose_best_first(&g, &cfg(0));
    assert!(bf.selected.iter().any(|e| e.key() == (0, 2, 0)));
    assert!(!t.layout_matches(&bf.poses, &[0, 1, 2, 3]));
    // GLC's depth-first search always steps onto the confident wrong edge
    // first, so every loop it finds is open; HLM enumerates the square.
    let r = compose_hlm(&g, &cfg(0));
    assert!(t.layout_matches(&r.poses, &[0, 1, 2, 3]));
    assert!(r.selected.iter().all(|e| e.key() != (0, 2, 0)));
    assert_eq!(r.selected.len(), 4);
}

#[test]
fn a_single_edge_is_selected() {
    let t = Tiles::new(vec![(0, 0), (1, 0)]);
    let g = t.graph(vec![t.correct(1, 0, 0, 0.7)]);
    for solver in Solver::ALL {
        let r = compose(&g, solver, &cfg(3));
        assert_eq!(r.selected.len(), 1, "{solver}");
        assert!(t.layout_matches(&r.poses, &[0, 1]));
        assert_eq!(r.anchor, 0);
        assert_eq!(r.poses[&0], RigidTransform2D::identity());
        assert_abs_diff_eq!(r.objective.unwrap(), 0.0, epsilon = 1e-12);
    }
}

#[test]
fn empty_graph_gives_empty_result() {
    let t = square();
    let g = t.graph(vec![]);
    for solver in Solver::ALL {
        let r = compose(&g, solver, &cfg(0));
        assert!(r.selected.is_empty());
        assert_eq!(r.poses.len(), 4);
        assert_eq!(r.objective, Some(0.0));
        assert_eq!(r.components().len(), 4);
    }
}

#[test]
fn triangle_with_rivals_keeps_the_correct_edges() {
    let t = Tiles::new(vec![(0, 0), (1, 0), (0, 1)]);
    let g = t.graph(vec![
        t.correct(0, 1, 0, 0.9),
        t.correct(1, 2, 0, 0.9),
        t.correct(2, 0, 0, 0.9),
        edge(0, 1, 1, cell_pose((0, -1)), 0.5),
        edge(1, 2, 1, cell_pose((2, 0)), 0.5),
        edge(2, 0, 1, cell_pose((0, 2)), 0.5),
    ]);
    let (best, u) = brute_force(&g);
    for solver in Solver::ALL {
        let r = compose(&g, solver, &cfg(1));
        let keys: BTreeSet<_> = r.selected.iter().map(|e| e.key()).collect();
        assert_eq!(keys, BTreeSet::from([(0, 1, 0), (1, 2, 0), (2, 0, 0)]), "{solver}");
        assert_eq!(indicators(&g, &r.selected), u);
        assert!(same_value(r.objective.unwrap(), best));
    }
}

#[test]
fn loop_free_graphs_fall_back_to_greedy() {
    let t = square();
    // The wrong 1 -> 2 puts 2 right of 1, so 2 -> 3 would land 3 on 1.
    let g = t.graph(vec![
        t.correct(0, 1, 0, 0.9),
        t.correct(1, 2, 0, 0.6),
        edge(1, 2, 1, cell_pose((1, 0)), 0.8),
        t.correct(2, 3, 0, 0.7),
    ]);
    let keys = |r: &AssemblyResult| r.selected.iter().map(|e| e.key()).collect::<BTreeSet<_>>();
    let bf = compose_best_first(&g, &cfg(0));
    assert_eq!(keys(&bf), BTreeSet::from([(0, 1, 0), (1, 2, 1)]));
    assert_eq!(keys(&compose_glc(&g, &cfg(0))), keys(&bf));

    // HLM finds no loop either, but its final exchange drops the blocking
    // edge: leaving out 0.8 beats leaving out 0.6 + 0.7.
    let (hlm, trace) = compose_hlm_traced(&g, &cfg(0));
    assert!(trace.loops.levels.is_empty() && trace.best.is_none());
    assert_eq!(keys(&hlm), BTreeSet::from([(0, 1, 0), (1, 2, 0), (2, 3, 0)]));
    assert!(t.layout_matches(&hlm.poses, &[0, 1, 2, 3]));
    assert_abs_diff_eq!(hlm.objective.unwrap(), 0.8, epsilon = 1e-9);
    assert_eq!(brute_force(&g).1, indicators(&g, &hlm.selected));
}

#[test]
fn false_loop_is_closed_and_induced() {
    let (t, edges) = eleven();
    let g = t.graph(edges);
    let loops = find_induced_loops(&g);
    let sets = loop_vertex_sets(&loops);
    assert!(sets.contains(&vec![5, 8, 9]));
    assert!(sets.contains(&vec![4, 6, 8, 9]));
    assert!(sets.contains(&vec![5, 6, 7, 8]));
}

#[test]
fn hlm_discards_the_false_loop() {
    let (t, edges) = eleven();
    let g = t.graph(edges);
    let (best, u) = brute_force(&g);
    for seed in 0..10 {
        let (r, trace) = compose_hlm_traced(&g, &cfg(seed));
        assert!(t.layout_matches(&r.poses, &CORRECT), "seed {seed}");
        assert_eq!(indicators(&g, &r.selected), u, "seed {seed}");
        assert!(same_value(r.objective.unwrap(), best));
        let l = trace.best.unwrap();
        assert_eq!(l.vertices, CORRECT.into_iter().collect());
        assert!(FALSE_LOOP.iter().all(|&k| !l.contains_edge(find(&g, k))));
    }
}

#[test]
fn glc_fixes_the_false_loop_when_it_comes_first() {
    let (t, edges) = eleven();
    let g = t.graph(edges);
    let r = compose_glc(&g, &cfg(GLC_FALSE_FIRST_SEED));
    let keys: BTreeSet<_> = r.selected.iter().map(|e| e.key()).collect();
    assert!(FALSE_LOOP.iter().all(|k| keys.contains(k)), "{keys:?}");
    assert!(!t.layout_matches(&r.poses, &CORRECT));
    let (best, _) = brute_force(&g);
    assert!(r.objective.unwrap() > best + 1e-6);
}

#[test]
fn hlm_matches_brute_force_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut exact = 0;
    let runs = 25;
    for _ in 0..runs {
        let (t, edges) = random_tiles(&mut rng, 6, 9);
        let g = t.graph(edges);
        let (best, _) = brute_force(&g);
        let r = compose_hlm(&g, &cfg(0));
        let got = r.objective.unwrap_or(f64::INFINITY);
        assert!(got >= best - 1e-6, "solver beat the exhaustive minimum: {got} < {best}");
        assert!(got <= best * 1.05 + 1e-9, "{got} vs {best}");
        if same_value(got, best) {
            exact += 1;
        }
    }
    assert!(exact as f64 >= 0.95 * runs as f64, "{exact}/{runs}");
}

#[test]
fn solvers_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let (t, edges) = random_tiles(&mut rng, 8, 12);
        let g = t.graph(edges);
        for solver in Solver::ALL {
            let a = result_to_json(&compose(&g, solver, &cfg(9)));
            let b = result_to_json(&compose(&g, solver, &cfg(9)));
            assert_eq!(a, b, "{solver}");
        }
    }
}

#[test]
fn result_file_round_trip() {
    let (t, edges) = eleven();
    let g = t.graph(edges);
    let r = compose_hlm(&g, &cfg(0));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("result.json");
    write_result(&path, &r).unwrap();
    let back = read_result(&path).unwrap();
    assert_eq!(back.selected, r.selected);
    assert_eq!(back.poses, r.poses);
    assert_eq!((back.solver, back.seed, back.anchor, back.objective), (r.solver, r.seed, r.anchor, r.objective));
    assert_eq!(result_to_json(&back), result_to_json(&r));

    assert!(matches!(read_result(&dir.path().join("none.json")), Err(Error::Format { .. })));
    let mut v: serde_json::Value = serde_json::from_str(&result_to_json(&r)).unwrap();
    let first = v["poses"][0].clone();
    v["poses"].as_array_mut().unwrap().push(first);
    std::fs::write(&path, v.to_string()).unwrap();
    assert!(matches!(read_result(&path), Err(Error::Format { .. })));
}

#[test]
fn graph_construction_validates_edges() {
    let t = square();
    let tol = t.tolerance();
    let bad = [
        vec![edge(0, 9, 0, RigidTransform2D::identity(), 0.5)],
        vec![edge(1, 1, 0, RigidTransform2D::identity(), 0.5)],
        vec![edge(0, 1, 0, RigidTransform2D::new(f64::NAN, 0.0, 0.0), 0.5)],
        vec![t.correct(0, 1, 0, 0.5), t.correct(0, 1, 0, 0.6)],
    ];
    for edges in bad {
        assert!(matches!(AssemblyGraph::new(&t.fragments, edges, tol), Err(Error::InvalidInput(_))));
    }
}

#[test]
fn solver_names_parse() {
    for s in Solver::ALL {
        assert_eq!(s.name().parse::<Solver>().unwrap(), s);
        assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
    }
    assert!(matches!("dfs".parse::<Solver>(), Err(Error::Parameter(_))));
    let c: ComposeConfig = serde_json::from_str(r#"{"theta_m": 7}"#).unwrap();
    assert_eq!(c.theta_m, 7);
    assert_eq!(c.glc_max_loop, ComposeConfig::default().glc_max_loop);
}
