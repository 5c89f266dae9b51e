use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2};

use crate::error::{Error, Result};
use crate::geometry::RigidTransform2D;

use super::graph::{edge_cost, edge_error, AssemblyGraph};

pub const MAX_REFINE_ITERATIONS: usize = 25;
pub const MIN_RELATIVE_DECREASE: f64 = 1e-8;
const MAX_HALVINGS: usize = 30;

/// Outcome of a refinement run.
#[derive(Clone, Debug)]
pub struct Refinement {
    pub poses: BTreeMap<usize, RigidTransform2D>,
    /// Total edge cost before the first and after every accepted step.
    pub history: Vec<f64>,
}

fn total_cost(g: &AssemblyGraph, edges: &[usize], poses: &BTreeMap<usize, RigidTransform2D>) -> f64 {
    edges
        .iter()
        .map(|&e| {
            let c = &g.edges[e];
            edge_cost(&c.transform, &poses[&c.src], &poses[&c.dst])
        })
        .sum()
}

fn rot(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Jacobians of `edge_error` with respect to `(tx, ty, theta)` of the two
/// endpoint poses.
pub fn edge_jacobians(
    t: &RigidTransform2D,
    xi: &RigidTransform2D,
    xj: &RigidTransform2D,
) -> (Matrix3<f64>, Matrix3<f64>) {
    let a = rot(-t.theta - xi.theta);
    let skew = Matrix2::new(0.0, -1.0, 1.0, 0.0);
    let d = xj.t() - xi.t();
    let dtheta_i: Vector2<f64> = -(a * skew * d);
    let mut ji = Matrix3::zeros();
    let mut jj = Matrix3::zeros();
    ji.fixed_view_mut::<2, 2>(0, 0).copy_from(&(-a));
    ji.fixed_view_mut::<2, 1>(0, 2).copy_from(&dtheta_i);
    ji[(2, 2)] = -1.0;
    jj.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    jj[(2, 2)] = 1.0;
    (ji, jj)
}

/// Gauss-Newton minimisation of the summed edge costs of `edges` over the
/// poses of the fragments they touch.
///
/// Each connected component keeps its smallest fragment fixed. Steps are
/// halved until the cost does not increase, so the recorded history is
/// non-increasing. Fragments not touched by `edges` keep their poses.
pub fn refine_poses(
    g: &AssemblyGraph,
    edges: &[usize],
    poses: &BTreeMap<usize, RigidTransform2D>,
) -> Result<Refinement> {
    for &e in edges {
        let c = g.edges.get(e).ok_or_else(|| Error::InvalidInput(format!("edge index {e} out of range")))?;
        if !poses.contains_key(&c.src) || !poses.contains_key(&c.dst) {
            return Err(Error::InvalidInput(format!(
                "edge ({}, {}, {}) has an endpoint without a pose",
                c.src, c.dst, c.k
            )));
        }
    }
    let selected: Vec<bool> = (0..g.edges.len()).map(|e| edges.contains(&e)).collect();
    let mut var: BTreeMap<usize, usize> = BTreeMap::new();
    for comp in super::graph::selected_components(g, &selected) {
        if comp.len() < 2 {
            continue;
        }
        for &v in &comp[1..] {
            let slot = var.len();
            var.insert(v, slot);
        }
    }
    let mut poses = poses.clone();
    let mut cost = total_cost(g, edges, &poses);
    let mut history = vec![cost];
    if var.is_empty() {
        return Ok(Refinement { poses, history });
    }
    let dim = 3 * var.len();
    for _ in 0..MAX_REFINE_ITERATIONS {
        if cost <= 0.0 {
            break;
        }
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let mut b = DVector::<f64>::zeros(dim);
        for &e in edges {
            let c = &g.edges[e];
            let (xi, xj) = (poses[&c.src], poses[&c.dst]);
            let err = edge_error(&c.transform, &xi, &xj);
            let (ji, jj) = edge_jacobians(&c.transform, &xi, &xj);
            let blocks = [(var.get(&c.src), ji), (var.get(&c.dst), jj)];
            for (sa, ja) in &blocks {
                let Some(&sa) = sa else { continue };
                let g_a = ja.transpose() * err;
                for r in 0..3 {
                    b[3 * sa + r] += g_a[r];
                }
                for (sb, jb) in &blocks {
                    let Some(&sb) = sb else { continue };
                    let block = ja.transpose() * jb;
                    for r in 0..3 {
                        for k in 0..3 {
                            h[(3 * sa + r, 3 * sb + k)] += block[(r, k)];
                        }
                    }
                }
            }
        }
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&(-&b)),
            None => {
                // Tiny damping for rank-deficient systems.
                let damped = h + DMatrix::identity(dim, dim) * 1e-9;
                match damped.lu().solve(&(-&b)) {
                    Some(s) => s,
                    None => break,
                }
            }
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut trial = poses.clone();
            for (&v, &slot) in &var {
                let p = poses[&v];
                trial.insert(
                    v,
                    RigidTransform2D::new(
                        p.theta + scale * step[3 * slot + 2],
                        p.tx + scale * step[3 * slot],
                        p.ty + scale * step[3 * slot + 1],
                    ),
                );
            }
            let c = total_cost(g, edges, &trial);
            if c <= cost {
                accepted = Some((trial, c));
                break;
            }
            scale *= 0.5;
        }
        let Some((trial, new_cost)) = accepted else {
            break;
        };
        let decrease = (cost - new_cost) / cost;
        poses = trial;
        cost = new_cost;
        history.push(cost);
        if decrease < MIN_RELATIVE_DECREASE {
            break;
        }
    }
    Ok(Refinement { poses, history })
}
