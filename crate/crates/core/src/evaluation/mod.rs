//! Assembly and detector quality against groundtruth.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, RigidTransform2D};
use crate::pairwise::AlignmentCandidate;
use crate::shredder::PuzzleBundle;

/// A fragment pose counts as correct within these bounds.
pub const POSE_ANGLE_DEG: f64 = 5.0;
pub const POSE_SHIFT_PX: f64 = 100.0;
/// A relative alignment counts as correct within these bounds.
pub const ALIGN_ANGLE_DEG: f64 = 5.0;
pub const ALIGN_SHIFT_PX: f64 = 10.0;

/// Whether `t`, a placement of `dst` in `src`'s frame, agrees with the
/// groundtruth within the given bounds. Translation error is measured at
/// `dst`'s centroid.
pub fn alignment_matches(
    bundle: &PuzzleBundle,
    src: usize,
    dst: usize,
    t: &RigidTransform2D,
    max_deg: f64,
    max_px: f64,
) -> bool {
    let Some(gt) = bundle.relative_pose(src, dst) else {
        return false;
    };
    let (da, dt) = t.distance_at(&gt, bundle.fragment(dst).centroid);
    da.to_degrees() <= max_deg && dt <= max_px
}

/// Groundtruth correctness of a candidate (5 degrees / 10 px).
pub fn candidate_is_correct(bundle: &PuzzleBundle, c: &AlignmentCandidate) -> bool {
    alignment_matches(bundle, c.src, c.dst, &c.transform, ALIGN_ANGLE_DEG, ALIGN_SHIFT_PX)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub id: usize,
    pub deg: f64,
    pub px: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectorStats {
    pub threshold: f64,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `tp / (tp + fp)`, or 0 when nothing is predicted positive.
    pub precision: f64,
    /// `tp / (tp + fn)`, or 0 when there are no correct candidates.
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pcr: f64,
    pub acr: f64,
    pub lcr: f64,
    pub pose_errors: Vec<PoseError>,
    /// Fragment whose pose fixed the gauge.
    pub gauge_anchor: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorStats>,
    pub wall_time: f64,
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Connected components of the selected edges over `n` fragments, largest
/// first (ties: smallest member first); members ascending.
pub fn components(n: usize, edges: &[AlignmentCandidate]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    for e in edges {
        if e.src < n && e.dst < n {
            let (a, b) = (find(&mut parent, e.src), find(&mut parent, e.dst));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        groups.entry(r).or_default().push(v);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    out
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    if v.is_empty() {
        return 0.0;
    }
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn pose_errors(
    bundle: &PuzzleBundle,
    poses: &BTreeMap<usize, RigidTransform2D>,
    gauge: &RigidTransform2D,
) -> Vec<PoseError> {
    poses
        .iter()
        .map(|(&id, r)| {
            let gt = bundle.groundtruth_poses[&id];
            let placed = *gauge * *r;
            let c = bundle.fragment(id).centroid;
            PoseError {
                id,
                deg: wrap_angle(placed.theta - gt.theta).abs().to_degrees(),
                px: (placed.apply(c) - gt.apply(c)).norm(),
            }
        })
        .collect()
}

/// Scores an assembly (a pose per fragment plus the selected edges).
///
/// Result and groundtruth frames differ by an unknown rigid motion. It is
/// fixed by trying, for each fragment of the largest selected component
/// (all fragments when nothing is selected), the motion that makes that
/// fragment exact, and keeping the one with the smallest median centroid
/// error over the component. PCR counts fragments within 5 degrees / 100 px,
/// ACR the share of selected edges within 5 degrees / 10 px of the
/// groundtruth relative pose (0 when nothing is selected), and LCR the
/// largest component's share of fragments.
pub fn score_assembly(
    bundle: &PuzzleBundle,
    poses: &BTreeMap<usize, RigidTransform2D>,
    selected: &[AlignmentCandidate],
) -> Result<EvalReport> {
    let n = bundle.len();
    if poses.len() != n || !poses.keys().copied().eq(0..n) {
        return Err(Error::InvalidInput(format!(
            "result has poses for {} fragments, bundle has {n}",
            poses.len()
        )));
    }
    if let Some(e) = selected.iter().find(|e| e.src >= n || e.dst >= n) {
        return Err(Error::InvalidInput(format!(
            "selected edge ({}, {}) names an unknown fragment",
            e.src, e.dst
        )));
    }
    let comps = components(n, selected);
    let largest = &comps[0];
    let judges: Vec<usize> = if largest.len() > 1 {
        largest.clone()
    } else {
        (0..n).collect()
    };
    let mut best: Option<(f64, usize, RigidTransform2D)> = None;
    for &v in &judges {
        let gauge = bundle.groundtruth_poses[&v] * poses[&v].inverse();
        let errs = pose_errors(bundle, poses, &gauge);
        let med = median(judges.iter().map(|&u| errs[u].px).collect());
        if best.as_ref().is_none_or(|b| med < b.0) {
            best = Some((med, v, gauge));
        }
    }
    let (_, gauge_anchor, gauge) = best.expect("bundle has fragments");
    let errs = pose_errors(bundle, poses, &gauge);
    let good = errs
        .iter()
        .filter(|e| e.deg <= POSE_ANGLE_DEG && e.px <= POSE_SHIFT_PX)
        .count();
    let correct_edges = selected.iter().filter(|e| candidate_is_correct(bundle, e)).count();
    Ok(EvalReport {
        pcr: good as f64 / n as f64,
        acr: if selected.is_empty() {
            0.0
        } else {
            correct_edges as f64 / selected.len() as f64
        },
        lcr: largest.len() as f64 / n as f64,
        pose_errors: errs,
        gauge_anchor,
        detector: None,
        wall_time: 0.0,
    })
}

/// Confusion counts of `gamma >= threshold` against groundtruth correctness.
pub fn score_detector(bundle: &PuzzleBundle, cands: &[AlignmentCandidate], threshold: f64) -> DetectorStats {
    let truth: Vec<bool> = cands.iter().map(|c| candidate_is_correct(bundle, c)).collect();
    let gammas: Vec<f64> = cands.iter().map(|c| c.gamma).collect();
    detector_stats(&truth, &gammas, threshold)
}

/// Confusion counts for precomputed truth labels and scores.
pub fn detector_stats(truth: &[bool], gammas: &[f64], threshold: f64) -> DetectorStats {
    let mut s = DetectorStats {
        threshold,
        ..Default::default()
    };
    for (&t, &g) in truth.iter().zip(gammas) {
        match (g >= threshold, t) {
            (true, true) => s.tp += 1,
            (true, false) => s.fp += 1,
            (false, true) => s.fn_ += 1,
            (false, false) => s.tn += 1,
        }
    }
    s.precision = if s.tp + s.fp > 0 {
        s.tp as f64 / (s.tp + s.fp) as f64
    } else {
        0.0
    };
    s.recall = if s.tp + s.fn_ > 0 {
        s.tp as f64 / (s.tp + s.fn_) as f64
    } else {
        0.0
    };
    s
}

/// One operating point per distinct score, highest threshold first.
pub fn pr_curve(truth: &[bool], gammas: &[f64]) -> Vec<DetectorStats> {
    let mut levels: Vec<f64> = gammas.to_vec();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    levels.iter().map(|&t| detector_stats(truth, gammas, t)).collect()
}

/// Plain-text table with one row per labelled report.
pub fn format_table(rows: &[(String, EvalReport)]) -> String {
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>7}  {:>7}  {:>7}  {:>9}", "run", "PCR", "ACR", "LCR", "time(s)");
    for (label, r) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>6.1}%  {:>6.1}%  {:>6.1}%  {:>9.2}",
            label,
            100.0 * r.pcr,
            100.0 * r.acr,
            100.0 * r.lcr,
            r.wall_time
        );
    }
    out
}
