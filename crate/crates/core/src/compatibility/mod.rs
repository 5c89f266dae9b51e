//! Compatibility scoring of alignment candidates.
//!
//! A candidate is rendered as a stitched pair, described by statistics of
//! its seam region, and scored by a boosted ensemble of shallow decision
//! trees. An oracle scorer driven by groundtruth stands in for the detector
//! when testing composition on its own.

mod boost;
mod features;
mod oracle;
mod rebalance;
mod stitch;
mod tree;

use rayon::prelude::*;

use crate::error::Result;
use crate::evaluation::candidate_is_correct;
use crate::pairwise::AlignmentCandidate;
use crate::shredder::PuzzleBundle;

pub use boost::{
    alpha_from_error, boost_train, load_model, save_model, to_vote, update_weights, BoostEnsemble,
    RoundStats, MIN_ROUND_ERROR,
};
pub use features::{extract_roi_features, FEATURE_NAMES, FEATURE_SCHEMA_VERSION, NUM_FEATURES};
pub use oracle::{oracle_gamma, ORACLE_HIGH, ORACLE_LOW};
pub use rebalance::{rebalance, OVERSAMPLE};
pub use stitch::{
    stitch_render, ContactStats, StitchSample, CANVAS_MAX_SIDE, OWNER_A, OWNER_B, ROI_DILATION,
    SEAM_REACH,
};
pub use tree::{DecisionTree, Learner, LearnerFactory, TreeFactory, TreeNode};

/// Default decision threshold on gamma.
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Default number of boosting rounds.
pub const DEFAULT_LEARNERS: usize = 5;

/// Seam features of one candidate, or `None` when the fragments do not
/// meet under its transform.
pub fn candidate_features(bundle: &PuzzleBundle, c: &AlignmentCandidate) -> Option<Vec<f64>> {
    let s = stitch_render(bundle.fragment(c.src), bundle.fragment(c.dst), &c.transform).ok()?;
    Some(extract_roi_features(&s))
}

/// Features of every candidate, in input order.
pub fn candidate_feature_table(
    bundle: &PuzzleBundle,
    cands: &[AlignmentCandidate],
) -> Vec<Option<Vec<f64>>> {
    cands.par_iter().map(|c| candidate_features(bundle, c)).collect()
}

/// Gamma of every candidate under `model`; candidates without a seam get 0.
pub fn score_with_model<L: Learner + Sync>(
    bundle: &PuzzleBundle,
    cands: &[AlignmentCandidate],
    model: &BoostEnsemble<L>,
) -> Vec<f64> {
    candidate_feature_table(bundle, cands)
        .into_iter()
        .map(|f| f.map_or(0.0, |x| model.predict(&x)))
        .collect()
}

/// Writes `gammas` into the candidates and drops those below `threshold`.
pub fn filter_candidates(
    mut cands: Vec<AlignmentCandidate>,
    gammas: &[f64],
    threshold: f64,
) -> Vec<AlignmentCandidate> {
    assert_eq!(cands.len(), gammas.len());
    for (c, g) in cands.iter_mut().zip(gammas) {
        c.gamma = g.clamp(0.0, 1.0);
    }
    cands.retain(|c| c.gamma >= threshold);
    cands
}

/// Labelled feature vectors for detector training.
#[derive(Clone, Debug, Default)]
pub struct TrainingSet {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<bool>,
}

impl TrainingSet {
    /// Adds every candidate of `bundle` that has a seam, labelled against
    /// the groundtruth.
    pub fn add_bundle(&mut self, bundle: &PuzzleBundle, cands: &[AlignmentCandidate]) {
        for (c, f) in cands.iter().zip(candidate_feature_table(bundle, cands)) {
            if let Some(x) = f {
                self.xs.push(x);
                self.ys.push(candidate_is_correct(bundle, c));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.ys.iter().filter(|&&y| y).count()
    }
}

/// Rebalances `set` under `seed` and boosts `rounds` depth-2 trees on it.
pub fn train_detector(set: &TrainingSet, rounds: usize, seed: u64) -> Result<BoostEnsemble> {
    let idx: Vec<usize> = (0..set.len()).collect();
    let picked = rebalance(&idx, |&i| set.ys[i], seed)?;
    let xs: Vec<Vec<f64>> = picked.iter().map(|&i| set.xs[i].clone()).collect();
    let ys: Vec<bool> = picked.iter().map(|&i| set.ys[i]).collect();
    boost_train(&xs, &ys, rounds, &TreeFactory::default())
}
