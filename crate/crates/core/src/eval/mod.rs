//! Evaluation harness: folds, re-sampling, grid search, baselines, the
//! random-label sanity check and sweep reporting.

pub mod confusion;
pub mod folds;
pub mod grid;
pub mod randcheck;
pub mod report;
pub mod resample;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use confusion::ConfusionCounts;
pub use folds::{Fold, FoldPlan, FOLD_COUNT};
pub use grid::{
    grid_search, zeror_baseline, Aggregation, CellOutcome, EvalResult, GridSpec, SearchOutcome,
};
pub use randcheck::{permute_labels, random_label_check};
pub use report::{median, sweep_strategies, write_reports, SweepCell};
pub use resample::{resample, ResamplingSpec, SamplingStrategy};

use crate::ml::{Algorithm, MlError, ParamValue};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least {need} rows for the fold protocol, got {n}")]
    TooFewRows { n: usize, need: usize },
    #[error("bad resampling spec: {0}")]
    BadResampling(String),
    #[error("training partition lost one of the classes")]
    MissingClass,
    #[error("hyper-parameter grid is empty")]
    EmptyGrid,
    #[error("every combination failed: {0}")]
    AllCombinationsFailed(String),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Harness configuration: seeds, aggregation mode and per-algorithm grids.
/// Loaded from a JSON config file; anything omitted falls back to defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub aggregation: Aggregation,
    /// Algorithms included in sweeps, report order.
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// Per-algorithm grid overrides, keyed by algorithm name.
    #[serde(default)]
    pub grids: BTreeMap<String, GridSpec>,
}

fn default_seed() -> u64 {
    42
}

fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::REPORT_ORDER.to_vec()
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            seed: default_seed(),
            aggregation: Aggregation::Pooled,
            algorithms: default_algorithms(),
            grids: BTreeMap::new(),
        }
    }
}

impl EvalConfig {
    pub fn grid_for(&self, alg: Algorithm) -> GridSpec {
        self.grids
            .get(alg.name())
            .cloned()
            .unwrap_or_else(|| default_grid(alg))
    }
}

/// Default hyper-parameter grids, sized to finish in minutes at desk scale.
pub fn default_grid(alg: Algorithm) -> GridSpec {
    use ParamValue::{Float, Int, List};
    match alg {
        Algorithm::Knn => GridSpec::empty().add("k", vec![Int(1), Int(3), Int(5), Int(9), Int(15)]),
        Algorithm::Tree => GridSpec::empty()
            .add("max_depth", vec![Int(4), Int(8), Int(16), Int(0)])
            .add("min_samples_split", vec![Int(2), Int(10)]),
        Algorithm::Forest => GridSpec::empty()
            .add("trees", vec![Int(50), Int(100)])
            .add("max_depth", vec![Int(8), Int(16), Int(0)]),
        Algorithm::Svm => GridSpec::empty().add("c", vec![Float(0.1), Float(1.0), Float(10.0)]),
        Algorithm::Logistic => {
            GridSpec::empty().add("lambda", vec![Float(0.0), Float(0.01), Float(0.1)])
        }
        Algorithm::Linear | Algorithm::Bayes | Algorithm::Zeror => GridSpec::empty(),
        Algorithm::DnnS => GridSpec::empty()
            .add("layers", vec![List(vec![32]), List(vec![64, 32])])
            .add("lr", vec![Float(0.1), Float(0.3)])
            .add("epochs", vec![Int(20), Int(50)]),
        Algorithm::DnnC => GridSpec::empty()
            .add("layers", vec![List(vec![32]), List(vec![64, 32])])
            .add("lr", vec![Float(0.1), Float(0.3)]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids_expand() {
        assert_eq!(default_grid(Algorithm::Knn).expand().len(), 5);
        assert_eq!(default_grid(Algorithm::Tree).expand().len(), 8);
        assert_eq!(default_grid(Algorithm::Linear).expand().len(), 1);
        assert_eq!(default_grid(Algorithm::DnnS).expand().len(), 8);
    }

    #[test]
    fn config_parses_with_overrides() {
        let json = r#"{
            "seed": 7,
            "aggregation": "averaged",
            "algorithms": ["knn", "tree"],
            "grids": { "knn": { "dims": [["k", [1, 3]]] } }
        }"#;
        let cfg: EvalConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.aggregation, Aggregation::Averaged);
        assert_eq!(cfg.algorithms, vec![Algorithm::Knn, Algorithm::Tree]);
        assert_eq!(cfg.grid_for(Algorithm::Knn).expand().len(), 2);
        // Unlisted algorithms fall back to defaults.
        assert_eq!(cfg.grid_for(Algorithm::Svm).expand().len(), 3);
    }

    #[test]
    fn config_grids_accept_layer_lists() {
        let json = r#"{
            "grids": { "dnn_s": { "dims": [
                ["layers", [[16], [32, 16]]],
                ["lr", [0.1]],
                ["epochs", [5]]
            ] } }
        }"#;
        let cfg: EvalConfig = serde_json::from_str(json).unwrap();
        let combos = cfg.grid_for(Algorithm::DnnS).expand();
        assert_eq!(combos.len(), 2);
        assert_eq!(combos[0]["layers"], ParamValue::List(vec![16]));
        assert_eq!(combos[1]["layers"], ParamValue::List(vec![32, 16]));
    }
}
