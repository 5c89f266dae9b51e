use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::evaluation::candidate_is_correct;
use crate::pairwise::AlignmentCandidate;
use crate::shredder::PuzzleBundle;

pub const ORACLE_HIGH: f64 = 0.9;
pub const ORACLE_LOW: f64 = 0.1;

fn candidate_seed(seed: u64, c: &AlignmentCandidate) -> u64 {
    // SplitMix-style mixing so neighbouring keys get unrelated streams.
    let mut z = seed
        ^ (c.src as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (c.dst as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (c.k as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Groundtruth-driven scores: `ORACLE_HIGH` for candidates matching the
/// groundtruth relative pose, `ORACLE_LOW` otherwise, each verdict flipped
/// with probability `noise`.
///
/// The flip for a candidate depends only on `seed` and its `(i, j, k)`, not
/// on its position in the list.
pub fn oracle_gamma(bundle: &PuzzleBundle, cands: &[AlignmentCandidate], noise: f64, seed: u64) -> Vec<f64> {
    cands
        .iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(candidate_seed(seed, c));
            let correct = candidate_is_correct(bundle, c);
            let flipped = rng.gen::<f64>() < noise;
            if correct != flipped {
                ORACLE_HIGH
            } else {
                ORACLE_LOW
            }
        })
        .collect()
}
