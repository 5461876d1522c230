//! Deterministic train / calibration / test splitting.

use crate::util::seeded_permutation;

use super::DataError;

/// Disjoint index lists whose union is `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub calibration: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    pub fn total(&self) -> usize {
        self.train.len() + self.calibration.len() + self.test.len()
    }
}

/// Shuffle `0..n` with ChaCha8 (Fisher-Yates via `SliceRandom::shuffle`,
/// generator seeded through `seed_from_u64`) and slice it contiguously into
/// train, calibration, and test blocks.
///
/// Block sizes are the largest-remainder apportionment of `fractions`:
/// each split gets `floor(f * n)` and the leftover samples go to the
/// splits with the largest fractional parts (ties resolved in
/// train/calibration/test order), so each size is within one sample of
/// `f * n`.
pub fn split(n: usize, fractions: [f64; 3], seed: u64) -> Result<SplitIndices, DataError> {
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(DataError::BadFractions { sum });
    }
    let sizes = apportion(n, &fractions);
    let names = ["train", "calibration", "test"];
    for (size, name) in sizes.iter().zip(names) {
        if *size == 0 {
            return Err(DataError::SplitTooSmall { n, split: name });
        }
    }

    let mut order = seeded_permutation(n, seed);
    let test = order.split_off(sizes[0] + sizes[1]);
    let calibration = order.split_off(sizes[0]);
    Ok(SplitIndices {
        train: order,
        calibration,
        test,
    })
}

fn apportion(n: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut leftover = n - sizes.iter().sum::<usize>();
    // Hand out the remainder by descending fractional part; equal parts go
    // to the earlier split.
    let mut by_frac: Vec<usize> = (0..3).collect();
    by_frac.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in &by_frac {
        if leftover == 0 {
            break;
        }
        sizes[i] += 1;
        leftover -= 1;
    }
    [sizes[0], sizes[1], sizes[2]]
}
