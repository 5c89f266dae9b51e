use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Replication factor for positive samples.
pub const OVERSAMPLE: usize = 20;

/// Between-class rebalancing: every positive is replicated `OVERSAMPLE`
/// times, then a uniformly random half of the enlarged set is kept.
///
/// The kept samples stay in their enlarged-set order (positives first, in
/// input order, then negatives), so the result depends only on the input
/// and `seed`.
pub fn rebalance<T: Clone>(
    samples: &[T],
    is_positive: impl Fn(&T) -> bool,
    seed: u64,
) -> Result<Vec<T>> {
    let (pos, neg): (Vec<&T>, Vec<&T>) = samples.iter().partition(|s| is_positive(s));
    if pos.is_empty() {
        return Err(Error::Imbalance);
    }
    let enlarged: Vec<&T> = pos
        .iter()
        .flat_map(|s| std::iter::repeat_n(*s, OVERSAMPLE))
        .chain(neg)
        .collect();
    let keep = enlarged.len() / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, enlarged.len(), keep).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| enlarged[i].clone()).collect())
}
