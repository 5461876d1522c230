//! Crate-internal seeded shuffling shared by the split, fold, and search
//! machinery. Everything is ChaCha8 via `seed_from_u64` so any two stages
//! given the same seed agree on the permutation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn seeded_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order
}

/// Assign `0..n` to `k` contiguous chunks of a seeded permutation; the
/// first `n % k` folds take the extra sample. Returns the fold id per
/// index.
pub(crate) fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let order = seeded_permutation(n, seed);
    let base = n / k;
    let extra = n % k;
    let mut fold_of = vec![0usize; n];
    let mut cursor = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &order[cursor..cursor + size] {
            fold_of[i] = fold;
        }
        cursor += size;
    }
    fold_of
}
