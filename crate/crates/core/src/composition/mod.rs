//! Global assembly from pairwise candidates.
//!
//! Fragments are vertices of a directed multi-graph whose edges are the
//! scored candidates. A selection of at most one edge per fragment pair,
//! together with fragment poses, is scored by
//! `sum u * f(X_i, X_j, T) + w * (1 - u)` where `f` is the squared pose-graph
//! error of a selected edge and `w` the penalty for leaving an edge out,
//! subject to no two placed fragments overlapping.
//!
//! Three solvers are provided: best-first greedy, greedy loop closing and
//! hierarchical loop merging. All finish the same way: leftover fragments
//! are attached greedily, poses are refined by Gauss-Newton and every
//! remaining edge that is cheaper to select than to drop is selected.

mod forest;
mod graph;
mod loops;
mod refine;
mod solvers;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RigidTransform2D;
use crate::pairwise::AlignmentCandidate;

pub use graph::{edge_cost, edge_error, objective, selected_components, AssemblyGraph, Tolerance, OVERLAP_STRIP};
pub use loops::{find_induced_loops, is_closed, loop_residual, merge_loops, Loop, LoopEdge, LoopSet, MergeVerdict};
pub use refine::{edge_jacobians, refine_poses, Refinement, MAX_REFINE_ITERATIONS, MIN_RELATIVE_DECREASE};
pub use solvers::HlmTrace;

use forest::Forest;

/// Default cap on merge attempts per level.
pub const DEFAULT_THETA_M: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Bf,
    Glc,
    Hlm,
}

impl Solver {
    pub const ALL: [Solver; 3] = [Solver::Bf, Solver::Glc, Solver::Hlm];

    pub fn name(&self) -> &'static str {
        match self {
            Solver::Bf => "bf",
            Solver::Glc => "glc",
            Solver::Hlm => "hlm",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bf" => Ok(Solver::Bf),
            "glc" => Ok(Solver::Glc),
            "hlm" => Ok(Solver::Hlm),
            _ => Err(Error::Parameter(format!("unknown solver `{s}` (expected bf, glc or hlm)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComposeConfig {
    pub seed: u64,
    pub theta_m: usize,
    /// GLC gives up after this many DFS runs per fragment.
    pub glc_steps_per_vertex: usize,
    /// Longest loop GLC's DFS will close.
    pub glc_max_loop: usize,
    /// Edge expansions allowed per DFS run.
    pub dfs_budget: usize,
    pub refine: bool,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            theta_m: DEFAULT_THETA_M,
            glc_steps_per_vertex: 50,
            glc_max_loop: 6,
            dfs_budget: 20_000,
            refine: true,
        }
    }
}

/// Wall-clock seconds per phase; kept out of the result file so results
/// stay byte-identical across runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub solve: f64,
    pub refine: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssemblyResult {
    pub solver: Solver,
    pub seed: u64,
    /// Smallest fragment of the largest component; it sits at the identity.
    pub anchor: usize,
    pub selected: Vec<AlignmentCandidate>,
    /// Every fragment's pose. Each component is expressed relative to its
    /// own smallest fragment.
    pub poses: BTreeMap<usize, RigidTransform2D>,
    /// Objective value, `None` when the selection overlaps.
    pub objective: Option<f64>,
    pub timings: Timings,
}

impl AssemblyResult {
    /// Selected-edge components, largest first.
    pub fn components(&self) -> Vec<Vec<usize>> {
        crate::evaluation::components(self.poses.len(), &self.selected)
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRecord {
    id: usize,
    matrix: [[f64; 3]; 3],
}

#[derive(Serialize, Deserialize)]
struct ResultFile {
    solver: Solver,
    seed: u64,
    anchor: usize,
    objective: Option<f64>,
    selected: Vec<AlignmentCandidate>,
    poses: Vec<PoseRecord>,
}

pub fn result_to_json(r: &AssemblyResult) -> String {
    let file = ResultFile {
        solver: r.solver,
        seed: r.seed,
        anchor: r.anchor,
        objective: r.objective,
        selected: r.selected.clone(),
        poses: r
            .poses
            .iter()
            .map(|(&id, p)| {
                let m = p.to_row_major();
                PoseRecord {
                    id,
                    matrix: [[m[0], m[1], m[2]], [m[3], m[4], m[5]], [m[6], m[7], m[8]]],
                }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("result serializes")
}

pub fn write_result(path: &Path, r: &AssemblyResult) -> Result<()> {
    fs::write(path, result_to_json(r)).map_err(|e| Error::io(path, e))
}

pub fn read_result(path: &Path) -> Result<AssemblyResult> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::format(path, "result file missing"),
        _ => Error::io(path, e),
    })?;
    let file: ResultFile = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    let mut poses = BTreeMap::new();
    for p in &file.poses {
        let flat: Vec<f64> = p.matrix.iter().flatten().copied().collect();
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(path, format!("pose of fragment {} is not finite", p.id)));
        }
        let t = RigidTransform2D::from_row_major(&flat.try_into().unwrap());
        if poses.insert(p.id, t).is_some() {
            return Err(Error::format(path, format!("fragment {} has two poses", p.id)));
        }
    }
    Ok(AssemblyResult {
        solver: file.solver,
        seed: file.seed,
        anchor: file.anchor,
        selected: file.selected,
        poses,
        objective: file.objective,
        timings: Timings::default(),
    })
}

/// Forest poses as a map, each component re-expressed relative to its
/// smallest fragment.
fn anchored_poses(forest: &Forest) -> BTreeMap<usize, RigidTransform2D> {
    let mut out = BTreeMap::new();
    for comp in forest.components() {
        let base = forest.poses[comp[0]].inverse();
        for v in comp {
            out.insert(v, base * forest.poses[v]);
        }
    }
    out
}

fn indicators(g: &AssemblyGraph, forest: &Forest) -> Vec<bool> {
    (0..g.edges.len()).map(|e| forest.selected.contains(&e)).collect()
}

/// Refined poses, unless refinement pulls fragments into each other or
/// otherwise raises the objective.
fn refine_guarded(
    g: &AssemblyGraph,
    forest: &Forest,
    poses: BTreeMap<usize, RigidTransform2D>,
) -> BTreeMap<usize, RigidTransform2D> {
    let edges: Vec<usize> = forest.selected.iter().copied().collect();
    let refined = match refine_poses(g, &edges, &poses) {
        Ok(r) => r.poses,
        Err(e) => {
            log::warn!("pose refinement skipped: {e}");
            return poses;
        }
    };
    let u = indicators(g, forest);
    let cost = |p: &BTreeMap<usize, RigidTransform2D>| objective(g, p, &u).unwrap_or(f64::INFINITY);
    if cost(&refined) <= cost(&poses) {
        refined
    } else {
        log::debug!("refinement introduced overlap; keeping chained poses");
        poses
    }
}

fn finish(g: &AssemblyGraph, mut forest: Forest, solver: Solver, cfg: &ComposeConfig, started: Instant) -> AssemblyResult {
    let solve = started.elapsed().as_secs_f64();
    let mut poses = anchored_poses(&forest);
    if cfg.refine {
        poses = refine_guarded(g, &forest, poses);
    }
    if forest.add_cheap_edges(g, &poses) > 0 && cfg.refine {
        poses = refine_guarded(g, &forest, poses);
    }
    let objective = objective(g, &poses, &indicators(g, &forest)).ok().filter(|v| v.is_finite());
    let selected: Vec<AlignmentCandidate> = forest.selected.iter().map(|&e| g.edges[e].clone()).collect();
    let anchor = crate::evaluation::components(g.num_vertices(), &selected)
        .first()
        .map_or(0, |c| c[0]);
    let total = started.elapsed().as_secs_f64();
    AssemblyResult {
        solver,
        seed: cfg.seed,
        anchor,
        selected,
        poses,
        objective,
        timings: Timings {
            solve,
            refine: total - solve,
            total,
        },
    }
}

pub fn compose_best_first(g: &AssemblyGraph, cfg: &ComposeConfig) -> AssemblyResult {
    let t = Instant::now();
    finish(g, solvers::best_first(g), Solver::Bf, cfg, t)
}

pub fn compose_glc(g: &AssemblyGraph, cfg: &ComposeConfig) -> AssemblyResult {
    let t = Instant::now();
    finish(g, solvers::glc(g, cfg), Solver::Glc, cfg, t)
}

pub fn compose_hlm_traced(g: &AssemblyGraph, cfg: &ComposeConfig) -> (AssemblyResult, HlmTrace) {
    let t = Instant::now();
    let (forest, trace) = solvers::hlm(g, cfg);
    (finish(g, forest, Solver::Hlm, cfg, t), trace)
}

pub fn compose_hlm(g: &AssemblyGraph, cfg: &ComposeConfig) -> AssemblyResult {
    compose_hlm_traced(g, cfg).0
}

pub fn compose(g: &AssemblyGraph, solver: Solver, cfg: &ComposeConfig) -> AssemblyResult {
    match solver {
        Solver::Bf => compose_best_first(g, cfg),
        Solver::Glc => compose_glc(g, cfg),
        Solver::Hlm => compose_hlm(g, cfg),
    }
}
