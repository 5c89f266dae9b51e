use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{overlap_exceeds_seam, Fragment, RigidTransform2D};
use crate::shredder::PuzzleBundle;

use super::{icp_refine, match_segments, matched_points, PairwiseConfig};

const ROI_MARGIN: f64 = 8.0;

/// Axis-aligned box `[x, y, w, h]` in the frame of the candidate's `src`
/// fragment.
pub type Roi = [f64; 4];

/// One directed edge of the assembly multi-graph: a hypothesised placement
/// of fragment `dst` in the frame of fragment `src`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "CandidateRecord", from = "CandidateRecord")]
pub struct AlignmentCandidate {
    pub src: usize,
    pub dst: usize,
    pub k: usize,
    /// Pose of `dst` relative to `src`: maps `dst`'s local frame into
    /// `src`'s, so consistent poses satisfy `X_src * transform = X_dst`.
    pub transform: RigidTransform2D,
    pub raw_score: usize,
    pub gamma: f64,
    pub roi: Roi,
}

impl AlignmentCandidate {
    pub fn key(&self) -> (usize, usize, usize) {
        (self.src, self.dst, self.k)
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.src.min(self.dst), self.src.max(self.dst))
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct CandidateRecord {
    i: usize,
    j: usize,
    k: usize,
    #[serde(rename = "T")]
    t: [f64; 9],
    raw_score: usize,
    gamma: f64,
    roi: [f64; 4],
}

impl From<AlignmentCandidate> for CandidateRecord {
    fn from(c: AlignmentCandidate) -> Self {
        Self::from(&c)
    }
}

impl From<CandidateRecord> for AlignmentCandidate {
    fn from(r: CandidateRecord) -> Self {
        Self {
            src: r.i,
            dst: r.j,
            k: r.k,
            transform: RigidTransform2D::from_row_major(&r.t),
            raw_score: r.raw_score,
            gamma: r.gamma,
            roi: r.roi,
        }
    }
}

impl From<&AlignmentCandidate> for CandidateRecord {
    fn from(c: &AlignmentCandidate) -> Self {
        Self {
            i: c.src,
            j: c.dst,
            k: c.k,
            t: c.transform.to_row_major(),
            raw_score: c.raw_score,
            gamma: c.gamma,
            roi: c.roi,
        }
    }
}

/// JSON lines, one candidate per line.
pub fn write_candidates(path: &Path, cands: &[AlignmentCandidate]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for c in cands {
        let line = serde_json::to_string(&CandidateRecord::from(c)).expect("record serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_candidates(path: &Path) -> Result<Vec<AlignmentCandidate>> {
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::format(path, "candidate file missing"),
        _ => Error::io(path, e),
    })?;
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: CandidateRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(path, format!("line {}: {e}", n + 1)))?;
        if r.i == r.j {
            return Err(Error::format(path, format!("line {}: self edge", n + 1)));
        }
        if !(0.0..=1.0).contains(&r.gamma) {
            return Err(Error::format(path, format!("line {}: gamma out of range", n + 1)));
        }
        if !seen.insert((r.i, r.j, r.k)) {
            return Err(Error::format(path, format!("line {}: duplicate (i, j, k)", n + 1)));
        }
        out.push(AlignmentCandidate::from(r));
    }
    Ok(out)
}

struct Refined {
    transform: RigidTransform2D,
    raw_score: usize,
    roi: Roi,
}

fn roi_of(a: &Fragment, matched: &[usize]) -> Roi {
    let pts = a.contour.points();
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &i in matched {
        x0 = x0.min(pts[i].x);
        y0 = y0.min(pts[i].y);
        x1 = x1.max(pts[i].x);
        y1 = y1.max(pts[i].y);
    }
    [
        x0 - ROI_MARGIN,
        y0 - ROI_MARGIN,
        x1 - x0 + 2.0 * ROI_MARGIN,
        y1 - y0 + 2.0 * ROI_MARGIN,
    ]
}

/// Candidates for one fragment pair, `k` assigned by descending raw score.
pub fn extract_pair(a: &Fragment, b: &Fragment, cfg: &PairwiseConfig) -> Vec<AlignmentCandidate> {
    let mut refined: Vec<Refined> = Vec::new();
    for seed in match_segments(a, b, cfg) {
        let Ok((t, _rms)) = icp_refine(a, b, &seed, cfg) else {
            continue;
        };
        if overlap_exceeds_seam(a, &RigidTransform2D::identity(), b, &t, cfg.canvas_scale) {
            continue;
        }
        let matched = matched_points(a, b, &t, cfg);
        if matched.len() < cfg.min_raw_score.max(1) {
            continue;
        }
        refined.push(Refined {
            transform: t,
            raw_score: matched.len(),
            roi: roi_of(a, &matched),
        });
    }
    // Highest score first; the seed order breaks ties deterministically.
    refined.sort_by_key(|c| std::cmp::Reverse(c.raw_score));
    let mut kept: Vec<Refined> = Vec::new();
    for r in refined {
        let dup = kept.iter().any(|k| {
            let (da, dt) = k.transform.distance_at(&r.transform, b.centroid);
            da <= cfg.dedup_angle && dt <= cfg.dedup_dist
        });
        if !dup {
            kept.push(r);
            if kept.len() == cfg.max_per_pair {
                break;
            }
        }
    }
    kept.into_iter()
        .enumerate()
        .map(|(k, r)| AlignmentCandidate {
            src: a.id,
            dst: b.id,
            k,
            transform: r.transform,
            raw_score: r.raw_score,
            gamma: 0.0,
            roi: r.roi,
        })
        .collect()
}

/// Candidates for every pair `i < j`, ordered by `(i, j, k)`.
pub fn extract_candidates(bundle: &PuzzleBundle, cfg: &PairwiseConfig) -> Vec<AlignmentCandidate> {
    let n = bundle.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut out: Vec<AlignmentCandidate> = pairs
        .par_iter()
        .flat_map_iter(|&(i, j)| extract_pair(bundle.fragment(i), bundle.fragment(j), cfg))
        .collect();
    out.sort_by_key(|c| c.key());
    out
}
