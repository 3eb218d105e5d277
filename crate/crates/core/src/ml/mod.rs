//! From-scratch classifiers behind one train/predict interface.
//!
//! Every algorithm is seed-deterministic: the same `(spec, data, seed)`
//! produces byte-identical serialized models. Scale-sensitive algorithms
//! (knn, svm, logistic, linear, the DNNs) standardize features with
//! parameters fitted on their training rows; tree, forest and bayes consume
//! raw features.

pub mod bayes;
pub mod forest;
pub mod knn;
pub mod linear;
pub mod logistic;
pub mod matrix;
pub mod mlp;
pub mod standardize;
pub mod svm;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matrix::FeatureMatrix;
pub use standardize::Standardizer;

use bayes::BayesState;
use forest::ForestState;
use knn::KnnState;
use linear::LinearState;
use logistic::LogisticState;
use mlp::{run_adaptive, MlpAdaptive, MlpState};
use svm::SvmState;
use tree::{TreeConfig, TreeNode};

#[derive(Debug, Error)]
pub enum MlError {
    #[error("training set is empty (or too small to standardize)")]
    EmptyTraining,
    #[error("training set contains a single class")]
    SingleClass,
    #[error("dimension mismatch: model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyper-parameter for {algorithm}: {message}")]
    InvalidParam {
        algorithm: &'static str,
        message: String,
    },
    #[error("this algorithm requires a non-empty dev set")]
    NeedsDevSet,
    #[error("numeric failure: {0}")]
    Numeric(&'static str),
    #[error("bad dataset: {0}")]
    BadDataset(String),
    #[error("bad model payload: {0}")]
    BadModel(String),
}

/// The nine classifiers of the comparison plus the trivial baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DnnS,
    DnnC,
    Knn,
    Tree,
    Svm,
    Forest,
    Logistic,
    Linear,
    Bayes,
    Zeror,
}

impl Algorithm {
    /// Row order of the summary report.
    pub const REPORT_ORDER: [Algorithm; 9] = [
        Algorithm::DnnS,
        Algorithm::DnnC,
        Algorithm::Forest,
        Algorithm::Knn,
        Algorithm::Linear,
        Algorithm::Logistic,
        Algorithm::Svm,
        Algorithm::Tree,
        Algorithm::Bayes,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::DnnS => "dnn_s",
            Algorithm::DnnC => "dnn_c",
            Algorithm::Knn => "knn",
            Algorithm::Tree => "tree",
            Algorithm::Svm => "svm",
            Algorithm::Forest => "forest",
            Algorithm::Logistic => "logistic",
            Algorithm::Linear => "linear",
            Algorithm::Bayes => "bayes",
            Algorithm::Zeror => "zeror",
        }
    }

    /// Hyper-parameter names this algorithm accepts.
    pub fn grid_dimensions(&self) -> &'static [&'static str] {
        match self {
            Algorithm::Knn => &["k"],
            Algorithm::Tree => &["max_depth", "min_samples_split"],
            Algorithm::Forest => &["trees", "max_depth", "min_samples_split"],
            Algorithm::Svm => &["c", "epochs"],
            Algorithm::Logistic => &["lambda", "max_iter"],
            Algorithm::Linear | Algorithm::Bayes | Algorithm::Zeror => &[],
            Algorithm::DnnS => &["layers", "lr", "epochs", "batch"],
            Algorithm::DnnC => &["layers", "lr", "batch", "max_epochs"],
        }
    }

    fn standardizes(&self) -> bool {
        matches!(
            self,
            Algorithm::Knn
                | Algorithm::Svm
                | Algorithm::Logistic
                | Algorithm::Linear
                | Algorithm::DnnS
                | Algorithm::DnnC
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = MlError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dnn_s" | "dnns" => Ok(Algorithm::DnnS),
            "dnn_c" | "dnnc" => Ok(Algorithm::DnnC),
            "knn" => Ok(Algorithm::Knn),
            "tree" => Ok(Algorithm::Tree),
            "svm" => Ok(Algorithm::Svm),
            "forest" => Ok(Algorithm::Forest),
            "logistic" => Ok(Algorithm::Logistic),
            "linear" => Ok(Algorithm::Linear),
            "bayes" => Ok(Algorithm::Bayes),
            "zeror" => Ok(Algorithm::Zeror),
            other => Err(MlError::InvalidParam {
                algorithm: "unknown",
                message: format!("unknown algorithm `{other}`"),
            }),
        }
    }
}

/// One hyper-parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    List(Vec<i64>),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "[{}]", parts.join(","))
            }
        }
    }
}

pub type Hyperparams = BTreeMap<String, ParamValue>;

/// Algorithm plus a concrete hyper-parameter assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub hyperparams: Hyperparams,
}

impl ModelSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        ModelSpec {
            algorithm,
            hyperparams: Hyperparams::new(),
        }
    }

    pub fn with(mut self, key: &str, value: ParamValue) -> Self {
        self.hyperparams.insert(key.to_string(), value);
        self
    }

    /// Reject hyper-parameter keys outside the algorithm's declared grid
    /// dimensions.
    pub fn validate(&self) -> Result<(), MlError> {
        let allowed = self.algorithm.grid_dimensions();
        for key in self.hyperparams.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(MlError::InvalidParam {
                    algorithm: self.algorithm.name(),
                    message: format!("unknown hyper-parameter `{key}`"),
                });
            }
        }
        Ok(())
    }

    fn int(&self, key: &str, default: i64) -> Result<i64, MlError> {
        match self.hyperparams.get(key) {
            None => Ok(default),
            Some(ParamValue::Int(v)) => Ok(*v),
            Some(other) => Err(MlError::InvalidParam {
                algorithm: self.algorithm.name(),
                message: format!("`{key}` must be an integer, got {other}"),
            }),
        }
    }

    fn float(&self, key: &str, default: f64) -> Result<f64, MlError> {
        match self.hyperparams.get(key) {
            None => Ok(default),
            Some(ParamValue::Float(v)) => Ok(*v),
            Some(ParamValue::Int(v)) => Ok(*v as f64),
            Some(other) => Err(MlError::InvalidParam {
                algorithm: self.algorithm.name(),
                message: format!("`{key}` must be a number, got {other}"),
            }),
        }
    }

    fn layer_list(&self, key: &str, default: &[usize]) -> Result<Vec<usize>, MlError> {
        match self.hyperparams.get(key) {
            None => Ok(default.to_vec()),
            Some(ParamValue::List(v)) if !v.is_empty() && v.iter().all(|&x| x > 0) => {
                Ok(v.iter().map(|&x| x as usize).collect())
            }
            Some(other) => Err(MlError::InvalidParam {
                algorithm: self.algorithm.name(),
                message: format!(
                    "`{key}` must be a non-empty list of positive widths, got {other}"
                ),
            }),
        }
    }
}

/// Learned parameters of one trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelState {
    Knn(KnnState),
    Tree { root: TreeNode },
    Forest(ForestState),
    Bayes(BayesState),
    Logistic(LogisticState),
    Linear(LinearState),
    Svm(SvmState),
    Mlp(MlpState),
    Zeror,
}

/// A trained classifier: spec, learned state and the standardization
/// parameters fitted on its training rows. Serializable as versioned JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub spec: ModelSpec,
    pub input_dim: usize,
    pub standardizer: Option<Standardizer>,
    pub state: ModelState,
}

impl TrainedModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MlError> {
        serde_json::from_str(text).map_err(|e| MlError::BadModel(e.to_string()))
    }

    /// Deterministic labels for the given rows.
    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<u8>, MlError> {
        if rows.cols() != self.input_dim {
            return Err(MlError::DimensionMismatch {
                expected: self.input_dim,
                got: rows.cols(),
            });
        }
        let mut out = Vec::with_capacity(rows.rows());
        let mut buf = vec![0.0; rows.cols()];
        for i in 0..rows.rows() {
            buf.copy_from_slice(rows.row(i));
            if let Some(s) = &self.standardizer {
                s.apply_row(&mut buf);
            }
            let label = match &self.state {
                ModelState::Knn(state) => knn::predict_knn(state, &buf),
                ModelState::Tree { root } => tree::predict_tree(root, &buf),
                ModelState::Forest(state) => forest::predict_forest(state, &buf),
                ModelState::Bayes(state) => bayes::predict_bayes(state, &buf),
                ModelState::Logistic(state) => logistic::predict_logistic(state, &buf),
                ModelState::Linear(state) => linear::predict_linear(state, &buf),
                ModelState::Svm(state) => svm::predict_svm(state, &buf),
                ModelState::Mlp(state) => state.predict_label(&buf),
                ModelState::Zeror => 1,
            };
            out.push(label);
        }
        Ok(out)
    }
}

/// SplitMix64, for deriving per-component seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed derivation: same `(seed, salt)` always gives the same stream.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(salt))
}

/// Train one model. `dev_idx` is consulted only by algorithms that need a
/// dev set (the adaptive DNN); all stochastic choices derive from `seed`.
pub fn train(
    spec: &ModelSpec,
    data: &FeatureMatrix,
    train_idx: &[usize],
    dev_idx: &[usize],
    seed: u64,
) -> Result<TrainedModel, MlError> {
    spec.validate()?;
    if train_idx.is_empty() {
        return Err(MlError::EmptyTraining);
    }
    let raw_train = data.select(train_idx);
    let standardizer = if spec.algorithm.standardizes() {
        Some(Standardizer::fit(&raw_train)?)
    } else {
        None
    };
    let train_view = match &standardizer {
        Some(s) => s.transform(&raw_train),
        None => raw_train,
    };

    let state = match spec.algorithm {
        Algorithm::Knn => {
            let k = spec.int("k", 5)?;
            if k < 1 {
                return Err(MlError::InvalidParam {
                    algorithm: "knn",
                    message: format!("k must be at least 1, got {k}"),
                });
            }
            ModelState::Knn(knn::fit_knn(&train_view, k as usize)?)
        }
        Algorithm::Tree => {
            let cfg = tree_config(spec)?;
            let idx: Vec<usize> = (0..train_view.rows()).collect();
            ModelState::Tree {
                root: tree::fit_tree(&train_view, &idx, &cfg, None),
            }
        }
        Algorithm::Forest => {
            let trees = spec.int("trees", 100)?;
            let cfg = tree_config(spec)?;
            if trees < 1 {
                return Err(MlError::InvalidParam {
                    algorithm: "forest",
                    message: format!("trees must be at least 1, got {trees}"),
                });
            }
            ModelState::Forest(forest::fit_forest(
                &train_view,
                trees as usize,
                cfg.max_depth,
                cfg.min_samples_split,
                mix_seed(seed, 0x464f52),
            ))
        }
        Algorithm::Bayes => ModelState::Bayes(bayes::fit_bayes(&train_view)?),
        Algorithm::Logistic => {
            let lambda = spec.float("lambda", 0.01)?;
            let max_iter = spec.int("max_iter", 500)?;
            if lambda < 0.0 {
                return Err(MlError::InvalidParam {
                    algorithm: "logistic",
                    message: format!("lambda must be non-negative, got {lambda}"),
                });
            }
            ModelState::Logistic(logistic::fit_logistic(
                &train_view,
                lambda,
                max_iter.max(1) as usize,
            )?)
        }
        Algorithm::Linear => ModelState::Linear(linear::fit_linear(&train_view)?),
        Algorithm::Svm => {
            let c = spec.float("c", 1.0)?;
            let epochs = spec.int("epochs", 200)?.max(1) as usize;
            ModelState::Svm(svm::fit_svm(&train_view, c, epochs)?)
        }
        Algorithm::DnnS => {
            let layers = spec.layer_list("layers", &[32])?;
            let lr = spec.float("lr", 0.1)?;
            let epochs = spec.int("epochs", 20)?.max(1) as usize;
            let batch = spec.int("batch", 32)?.max(1) as usize;
            let mut dims = vec![train_view.cols()];
            dims.extend(layers);
            dims.push(1);
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x444e4e53));
            let net = MlpState::init(&dims, &mut rng);
            ModelState::Mlp(mlp::train_fixed(
                net,
                &train_view,
                lr,
                epochs,
                batch,
                &mut rng,
            ))
        }
        Algorithm::DnnC => {
            if dev_idx.is_empty() {
                return Err(MlError::NeedsDevSet);
            }
            let layers = spec.layer_list("layers", &[32])?;
            let lr = spec.float("lr", 0.1)?;
            let batch = spec.int("batch", 32)?.max(1) as usize;
            let max_epochs = spec.int("max_epochs", 200)?.max(1) as usize;
            let mut dims = vec![train_view.cols()];
            dims.extend(layers);
            dims.push(1);
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x444e4e43));
            let net = MlpState::init(&dims, &mut rng);

            let raw_dev = data.select(dev_idx);
            let dev_view = match &standardizer {
                Some(s) => s.transform(&raw_dev),
                None => raw_dev,
            };
            let mut adaptive = MlpAdaptive {
                net,
                train: &train_view,
                dev: &dev_view,
                batch,
                rng,
            };
            run_adaptive(&mut adaptive, lr, 4, max_epochs);
            ModelState::Mlp(adaptive.net)
        }
        Algorithm::Zeror => ModelState::Zeror,
    };

    Ok(TrainedModel {
        version: 1,
        spec: spec.clone(),
        input_dim: data.cols(),
        standardizer,
        state,
    })
}

fn tree_config(spec: &ModelSpec) -> Result<TreeConfig, MlError> {
    let depth = spec.int("max_depth", 0)?;
    let min_split = spec.int("min_samples_split", 2)?;
    if depth < 0 || min_split < 2 {
        return Err(MlError::InvalidParam {
            algorithm: spec.algorithm.name(),
            message: "max_depth must be >= 0 (0 = unbounded), min_samples_split >= 2".into(),
        });
    }
    Ok(TreeConfig {
        max_depth: if depth == 0 { None } else { Some(depth as u32) },
        min_samples_split: min_split as usize,
        feature_sample: None,
    })
}

/// Anything that can produce predictions for rows of a matrix.
pub trait Model: Send + Sync {
    fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<u8>, MlError>;
}

impl Model for TrainedModel {
    fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<u8>, MlError> {
        TrainedModel::predict(self, rows)
    }
}

/// Training strategy the evaluation harness drives; the standard
/// implementation dispatches to [`train`], tests can substitute rigged
/// learners.
pub trait Learner: Sync {
    fn train(
        &self,
        spec: &ModelSpec,
        data: &FeatureMatrix,
        train_idx: &[usize],
        dev_idx: &[usize],
        seed: u64,
    ) -> Result<Box<dyn Model>, MlError>;
}

/// The real thing: trains the from-scratch classifiers.
pub struct StandardLearner;

impl Learner for StandardLearner {
    fn train(
        &self,
        spec: &ModelSpec,
        data: &FeatureMatrix,
        train_idx: &[usize],
        dev_idx: &[usize],
        seed: u64,
    ) -> Result<Box<dyn Model>, MlError> {
        Ok(Box::new(train(spec, data, train_idx, dev_idx, seed)?))
    }
}
