//! Stage wiring shared by the command-line tool and end-to-end tests.

use crate::compatibility::{filter_candidates, oracle_gamma, score_with_model, train_detector, BoostEnsemble, TrainingSet};
use crate::composition::{compose, AssemblyGraph, AssemblyResult, ComposeConfig, Solver, Tolerance};
use crate::error::Result;
use crate::pairwise::{extract_candidates, AlignmentCandidate, PairwiseConfig};
use crate::shredder::{add_pixel_noise, shred, shred_to_count, synthesize_image, PuzzleBundle, ShredParams};

/// Side length of generated source images.
pub const DEFAULT_IMAGE_SIDE: u32 = 300;

/// How a synthetic puzzle is generated.
#[derive(Clone, Debug, PartialEq)]
pub struct PuzzleSpec {
    pub seed: u64,
    pub side: u32,
    /// Target piece count; `None` uses `shred` as configured.
    pub pieces: Option<usize>,
    pub shred: ShredParams,
    /// Amplitude of per-pixel noise added to the source image.
    pub pixel_noise: f64,
}

impl PuzzleSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            side: DEFAULT_IMAGE_SIDE,
            pieces: None,
            shred: ShredParams::default(),
            pixel_noise: 0.0,
        }
    }

    pub fn build(&self) -> Result<PuzzleBundle> {
        let mut img = synthesize_image(self.side, self.side, self.seed);
        add_pixel_noise(&mut img, self.pixel_noise, self.seed);
        match self.pieces {
            Some(n) => shred_to_count(
                &img,
                n,
                self.shred.orientation_jitter,
                self.shred.perturbation_amplitude,
                self.seed,
            ),
            None => shred(&img, &self.shred, self.seed),
        }
    }
}

/// Source of candidate scores.
#[derive(Clone, Debug)]
pub enum Scorer {
    Model(BoostEnsemble),
    /// Groundtruth verdicts flipped with the given probability.
    Oracle { noise: f64 },
}

pub fn score_candidates(bundle: &PuzzleBundle, cands: &[AlignmentCandidate], scorer: &Scorer, seed: u64) -> Vec<f64> {
    match scorer {
        Scorer::Model(m) => score_with_model(bundle, cands, m),
        Scorer::Oracle { noise } => oracle_gamma(bundle, cands, *noise, seed),
    }
}

/// Scores `cands`, keeps those at or above `threshold` and assembles them.
pub fn solve(
    bundle: &PuzzleBundle,
    cands: Vec<AlignmentCandidate>,
    scorer: &Scorer,
    threshold: f64,
    solver: Solver,
    cfg: &ComposeConfig,
) -> Result<AssemblyResult> {
    let gammas = score_candidates(bundle, &cands, scorer, cfg.seed);
    let kept = filter_candidates(cands, &gammas, threshold);
    assemble(bundle, kept, solver, cfg)
}

/// Assembles already-scored candidates.
pub fn assemble(
    bundle: &PuzzleBundle,
    cands: Vec<AlignmentCandidate>,
    solver: Solver,
    cfg: &ComposeConfig,
) -> Result<AssemblyResult> {
    let g = AssemblyGraph::new(&bundle.fragments, cands, Tolerance::for_diagonal(bundle.canvas_diagonal()))?;
    Ok(compose(&g, solver, cfg))
}

/// Detector trained on the candidates of the given puzzles.
pub fn train_on(specs: &[PuzzleSpec], pairwise: &PairwiseConfig, rounds: usize, seed: u64) -> Result<BoostEnsemble> {
    let mut set = TrainingSet::default();
    for spec in specs {
        let b = spec.build()?;
        let cands = extract_candidates(&b, pairwise);
        set.add_bundle(&b, &cands);
    }
    log::info!("training on {} samples ({} positive)", set.len(), set.positives());
    train_detector(&set, rounds, seed)
}
