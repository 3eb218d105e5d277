//! Random-label sanity check: shuffle the labels (preserving the positive
//! count), re-run the search, and confirm the scores collapse.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::folds::FoldPlan;
use super::grid::{grid_search, Aggregation, GridSpec, SearchOutcome};
use super::resample::ResamplingSpec;
use super::EvalError;
use crate::ml::{mix_seed, Algorithm, FeatureMatrix, Learner};

/// Permute labels uniformly at random; the number of positives is preserved
/// exactly.
pub fn permute_labels(labels: &[u8], seed: u64) -> Vec<u8> {
    let mut out = labels.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.shuffle(&mut rng);
    out
}

/// Re-run the grid search per algorithm on randomly re-assigned labels.
pub fn random_label_check(
    learner: &dyn Learner,
    algorithms: &[(Algorithm, GridSpec)],
    data: &FeatureMatrix,
    fold_seed: u64,
    seed: u64,
) -> Result<Vec<SearchOutcome>, EvalError> {
    let shuffled = data
        .with_labels(permute_labels(&data.labels, seed))
        .map_err(EvalError::Ml)?;
    let folds = FoldPlan::build(&shuffled.labels, fold_seed)?;
    let mut out = Vec::new();
    for (alg, grid) in algorithms {
        out.push(grid_search(
            learner,
            *alg,
            grid,
            &shuffled,
            &folds,
            &ResamplingSpec::none(),
            mix_seed(seed, *alg as u64),
            Aggregation::Pooled,
        )?);
    }
    Ok(out)
}
