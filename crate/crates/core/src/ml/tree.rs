//! Binary CART decision tree with Gini impurity.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        label: u8,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone)]
pub struct TreeConfig {
    /// `None` = unbounded.
    pub max_depth: Option<u32>,
    pub min_samples_split: usize,
    /// Number of features considered per split; `None` = all. Used by the
    /// forest (√d per split).
    pub feature_sample: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_samples_split: 2,
            feature_sample: None,
        }
    }
}

pub fn fit_tree(
    data: &FeatureMatrix,
    idx: &[usize],
    cfg: &TreeConfig,
    rng: Option<&mut ChaCha8Rng>,
) -> TreeNode {
    let mut rng = rng;
    grow(data, idx, cfg, 0, &mut rng)
}

pub fn predict_tree(node: &TreeNode, row: &[f64]) -> u8 {
    match node {
        TreeNode::Leaf { label } => *label,
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if row[*feature] <= *threshold {
                predict_tree(left, row)
            } else {
                predict_tree(right, row)
            }
        }
    }
}

fn majority(data: &FeatureMatrix, idx: &[usize]) -> u8 {
    let pos = idx.iter().filter(|&&i| data.labels[i] == 1).count();
    // Tie goes to the positive class.
    if pos * 2 >= idx.len() {
        1
    } else {
        0
    }
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

fn grow(
    data: &FeatureMatrix,
    idx: &[usize],
    cfg: &TreeConfig,
    depth: u32,
    rng: &mut Option<&mut ChaCha8Rng>,
) -> TreeNode {
    let n = idx.len();
    let pos = idx.iter().filter(|&&i| data.labels[i] == 1).count();
    let pure = pos == 0 || pos == n;
    let depth_hit = cfg.max_depth.map(|d| depth >= d).unwrap_or(false);
    if pure || depth_hit || n < cfg.min_samples_split {
        return TreeNode::Leaf {
            label: majority(data, idx),
        };
    }

    let d = data.cols();
    let features: Vec<usize> = match (cfg.feature_sample, rng.as_deref_mut()) {
        (Some(k), Some(rng)) if k < d => {
            let mut all: Vec<usize> = (0..d).collect();
            all.shuffle(rng);
            let mut chosen: Vec<usize> = all.into_iter().take(k).collect();
            chosen.sort_unstable();
            chosen
        }
        _ => (0..d).collect(),
    };

    let parent_gini = gini(pos as f64, n as f64);
    let mut best: Option<(f64, usize, f64)> = None; // (weighted gini, feature, threshold)

    let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(n);
    for &f in &features {
        pairs.clear();
        pairs.extend(idx.iter().map(|&i| (data.row(i)[f], data.labels[i])));
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));

        let total_pos = pos as f64;
        let mut left_pos = 0.0;
        let mut left_n = 0.0;
        for w in 0..n - 1 {
            left_pos += pairs[w].1 as f64;
            left_n += 1.0;
            if pairs[w].0 == pairs[w + 1].0 {
                continue;
            }
            let right_n = n as f64 - left_n;
            let weighted = (left_n * gini(left_pos, left_n)
                + right_n * gini(total_pos - left_pos, right_n))
                / n as f64;
            let better = match best {
                None => true,
                Some((b, _, _)) => weighted < b - 1e-15,
            };
            if better {
                let threshold = (pairs[w].0 + pairs[w + 1].0) / 2.0;
                best = Some((weighted, f, threshold));
            }
        }
    }

    let Some((weighted, feature, threshold)) = best else {
        return TreeNode::Leaf {
            label: majority(data, idx),
        };
    };
    if weighted >= parent_gini - 1e-15 {
        return TreeNode::Leaf {
            label: majority(data, idx),
        };
    }

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| data.row(i)[feature] <= threshold);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(grow(data, &left_idx, cfg, depth + 1, rng)),
        right: Box::new(grow(data, &right_idx, cfg, depth + 1, rng)),
    }
}
