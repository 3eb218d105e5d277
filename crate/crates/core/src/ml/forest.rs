//! Random forest: bootstrapped CART trees with √d feature sampling per split.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use super::mix_seed;
use super::tree::{fit_tree, predict_tree, TreeConfig, TreeNode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestState {
    pub trees: Vec<TreeNode>,
}

/// Draw one bootstrap sample of `n` row indices; exposed so tests can rebuild
/// a forest's component tree exactly.
pub fn bootstrap_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Per-tree RNG seed, derived deterministically from the forest seed.
pub fn tree_seed(seed: u64, tree_index: u64) -> u64 {
    mix_seed(seed, 0x666f7265 ^ tree_index)
}

pub fn fit_forest(
    data: &FeatureMatrix,
    trees: usize,
    max_depth: Option<u32>,
    min_samples_split: usize,
    seed: u64,
) -> ForestState {
    let d = data.cols();
    let k = (d as f64).sqrt().ceil() as usize;
    let cfg = TreeConfig {
        max_depth,
        min_samples_split,
        feature_sample: Some(k.max(1)),
    };
    let mut fitted = Vec::with_capacity(trees);
    for b in 0..trees {
        let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, b as u64));
        let sample = bootstrap_indices(data.rows(), &mut rng);
        fitted.push(fit_tree(data, &sample, &cfg, Some(&mut rng)));
    }
    ForestState { trees: fitted }
}

/// Majority vote; ties go to the positive class.
pub fn predict_forest(state: &ForestState, row: &[f64]) -> u8 {
    let pos = state
        .trees
        .iter()
        .filter(|t| predict_tree(t, row) == 1)
        .count();
    if pos * 2 >= state.trees.len() {
        1
    } else {
        0
    }
}
