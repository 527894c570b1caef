//! Deterministic k-fold split plans.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A k-fold partition of `n` image indices. Fold sizes differ by at most
/// one and the assignment is a pure function of `(n, k, seed)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    /// `assignments[i]` is the fold id of image `i`.
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// Indices belonging to fold `fold`.
    pub fn fold_indices(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices outside fold `fold` (the training side).
    pub fn rest_indices(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Shuffles `0..n` with a seeded RNG and deals contiguous chunks into `k`
/// folds; the first `n % k` folds take the extra element.
pub fn kfold_splits(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k}, need k >= 2")));
    }
    if n < k {
        return Err(Error::TooFewSamples { need: k, have: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let base = n / k;
    let extra = n % k;
    let mut assignments = vec![0usize; n];
    let mut cursor = 0usize;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &idx in &order[cursor..cursor + size] {
            assignments[idx] = fold;
        }
        cursor += size;
    }
    Ok(FoldPlan { k, assignments, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_folds_of_500() {
        let plan = kfold_splits(2000, 4, 9).unwrap();
        for fold in 0..4 {
            assert_eq!(plan.fold_indices(fold).len(), 500);
        }
    }

    #[test]
    fn uneven_sizes() {
        let plan = kfold_splits(5, 2, 1).unwrap();
        let mut sizes: Vec<usize> = (0..2).map(|f| plan.fold_indices(f).len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 3]);
    }

    #[test]
    fn deterministic() {
        assert_eq!(kfold_splits(101, 4, 7).unwrap(), kfold_splits(101, 4, 7).unwrap());
        assert_ne!(
            kfold_splits(101, 4, 7).unwrap().assignments,
            kfold_splits(101, 4, 8).unwrap().assignments
        );
    }

    #[test]
    fn rejects_small_n() {
        assert!(kfold_splits(3, 4, 0).is_err());
        assert!(kfold_splits(10, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn every_index_in_exactly_one_fold(n in 2usize..300, k in 2usize..10, seed in any::<u64>()) {
            prop_assume!(n >= k);
            let plan = kfold_splits(n, k, seed).unwrap();
            let mut seen = vec![false; n];
            for fold in 0..k {
                for idx in plan.fold_indices(fold) {
                    prop_assert!(!seen[idx]);
                    seen[idx] = true;
                }
            }
            prop_assert!(seen.into_iter().all(|s| s));
            // sizes differ by at most one
            let sizes: Vec<usize> = (0..k).map(|f| plan.fold_indices(f).len()).collect();
            let min = sizes.iter().min().unwrap();
            let max = sizes.iter().max().unwrap();
            prop_assert!(max - min <= 1);
        }
    }
}
