//! Stratified rotating folds: ten disjoint 10% blocks; fold `i` tests on
//! block `i`, selects on block `i+1 (mod 10)`, and trains on the remaining
//! eight — an 80/10/10 split where every row is tested exactly once.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

pub const FOLD_COUNT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub blocks: Vec<Vec<usize>>,
    pub seed: u64,
}

/// Train/dev/test index sets of one fold.
#[derive(Debug, Clone)]
pub struct Fold {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

impl FoldPlan {
    /// Stratified shuffle into ten blocks: positives and negatives are
    /// shuffled separately and dealt round-robin, so each block's positive
    /// count is within one of every other's.
    pub fn build(labels: &[u8], seed: u64) -> Result<Self, EvalError> {
        let n = labels.len();
        if n < FOLD_COUNT {
            return Err(EvalError::TooFewRows {
                n,
                need: FOLD_COUNT,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
        let mut neg: Vec<usize> = (0..n).filter(|&i| labels[i] == 0).collect();
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);

        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); FOLD_COUNT];
        for (j, idx) in pos.iter().chain(neg.iter()).enumerate() {
            blocks[j % FOLD_COUNT].push(*idx);
        }
        Ok(FoldPlan { blocks, seed })
    }

    pub fn fold(&self, i: usize) -> Fold {
        let test = self.blocks[i].clone();
        let dev = self.blocks[(i + 1) % FOLD_COUNT].clone();
        let mut train = Vec::new();
        for (b, block) in self.blocks.iter().enumerate() {
            if b != i && b != (i + 1) % FOLD_COUNT {
                train.extend_from_slice(block);
            }
        }
        Fold { train, dev, test }
    }

    pub fn folds(&self) -> impl Iterator<Item = Fold> + '_ {
        (0..FOLD_COUNT).map(|i| self.fold(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn labels(n: usize, pos: usize) -> Vec<u8> {
        (0..n).map(|i| u8::from(i < pos)).collect()
    }

    #[test]
    fn exact_stratification_at_ten_percent() {
        let plan = FoldPlan::build(&labels(100, 10), 7).unwrap();
        for block in &plan.blocks {
            assert_eq!(block.len(), 10);
            let pos = block.iter().filter(|&&i| i < 10).count();
            assert_eq!(pos, 1);
        }
    }

    #[test]
    fn blocks_partition_all_rows() {
        let plan = FoldPlan::build(&labels(103, 17), 3).unwrap();
        let mut seen = BTreeSet::new();
        for block in &plan.blocks {
            for &i in block {
                assert!(seen.insert(i), "row {i} appears twice");
            }
        }
        assert_eq!(seen.len(), 103);
        // Block sizes differ by at most one.
        let sizes: Vec<usize> = plan.blocks.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn fold_partitions_are_disjoint_and_cover() {
        let plan = FoldPlan::build(&labels(60, 12), 11).unwrap();
        for f in plan.folds() {
            let train: BTreeSet<_> = f.train.iter().collect();
            let dev: BTreeSet<_> = f.dev.iter().collect();
            let test: BTreeSet<_> = f.test.iter().collect();
            assert!(train.is_disjoint(&dev));
            assert!(train.is_disjoint(&test));
            assert!(dev.is_disjoint(&test));
            assert_eq!(train.len() + dev.len() + test.len(), 60);
        }
        // Each row is in test exactly once across the ten folds.
        let mut test_seen = BTreeSet::new();
        for f in plan.folds() {
            for i in f.test {
                assert!(test_seen.insert(i));
            }
        }
        assert_eq!(test_seen.len(), 60);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let l = labels(50, 9);
        assert_eq!(
            FoldPlan::build(&l, 42).unwrap(),
            FoldPlan::build(&l, 42).unwrap()
        );
        assert_ne!(
            FoldPlan::build(&l, 42).unwrap().blocks,
            FoldPlan::build(&l, 43).unwrap().blocks
        );
    }

    #[test]
    fn too_few_rows_is_an_error() {
        assert!(FoldPlan::build(&labels(9, 2), 1).is_err());
    }
}
