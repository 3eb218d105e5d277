//! Random over- and under-sampling of the training partition.
//!
//! The ratio is the target minority:majority proportion. Over-sampling
//! repeats minority rows uniformly at random until
//! `minority = round(ratio * majority)`; under-sampling throws away majority
//! rows uniformly at random until `majority = round(minority / ratio)`.
//! Dev and test partitions are never touched.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStrategy {
    None,
    Over,
    Under,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResamplingSpec {
    pub strategy: SamplingStrategy,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ratio: Option<f64>,
}

impl ResamplingSpec {
    pub fn none() -> Self {
        ResamplingSpec {
            strategy: SamplingStrategy::None,
            ratio: None,
        }
    }

    pub fn over(ratio: f64) -> Self {
        ResamplingSpec {
            strategy: SamplingStrategy::Over,
            ratio: Some(ratio),
        }
    }

    pub fn under(ratio: f64) -> Self {
        ResamplingSpec {
            strategy: SamplingStrategy::Under,
            ratio: Some(ratio),
        }
    }

    /// The nine cells of the sweep: none, then over/under at the four ratios.
    pub fn all_strategies() -> Vec<ResamplingSpec> {
        let mut v = vec![ResamplingSpec::none()];
        for r in [0.25, 0.50, 0.75, 1.00] {
            v.push(ResamplingSpec::over(r));
        }
        for r in [0.25, 0.50, 0.75, 1.00] {
            v.push(ResamplingSpec::under(r));
        }
        v
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        match (self.strategy, self.ratio) {
            (SamplingStrategy::None, None) => Ok(()),
            (SamplingStrategy::None, Some(_)) => Err(EvalError::BadResampling(
                "strategy `none` takes no ratio".into(),
            )),
            (_, Some(r)) if r > 0.0 && r <= 1.0 => Ok(()),
            (_, r) => Err(EvalError::BadResampling(format!(
                "ratio must be in (0, 1], got {r:?}"
            ))),
        }
    }
}

impl fmt::Display for ResamplingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.strategy, self.ratio) {
            (SamplingStrategy::None, _) => write!(f, "none"),
            (SamplingStrategy::Over, Some(r)) => write!(f, "over:{r}"),
            (SamplingStrategy::Under, Some(r)) => write!(f, "under:{r}"),
            _ => write!(f, "invalid"),
        }
    }
}

impl FromStr for ResamplingSpec {
    type Err = EvalError;

    /// `none`, `over:0.5`, `under:0.25`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(ResamplingSpec::none());
        }
        let (kind, ratio) = s
            .split_once(':')
            .ok_or_else(|| EvalError::BadResampling(format!("cannot parse `{s}`")))?;
        let ratio: f64 = ratio
            .parse()
            .map_err(|_| EvalError::BadResampling(format!("bad ratio in `{s}`")))?;
        let spec = match kind.to_ascii_lowercase().as_str() {
            "over" | "up" => ResamplingSpec::over(ratio),
            "under" | "down" => ResamplingSpec::under(ratio),
            other => {
                return Err(EvalError::BadResampling(format!(
                    "unknown strategy `{other}`"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Resample training row indices. Returns a new index list into the same
/// matrix: over-sampling appends duplicates, under-sampling drops majority
/// rows (original order preserved for the survivors).
pub fn resample(
    train_idx: &[usize],
    labels: &[u8],
    spec: &ResamplingSpec,
    seed: u64,
) -> Result<Vec<usize>, EvalError> {
    spec.validate()?;
    if spec.strategy == SamplingStrategy::None {
        return Ok(train_idx.to_vec());
    }
    let ratio = spec.ratio.expect("validated");
    let pos: Vec<usize> = train_idx
        .iter()
        .copied()
        .filter(|&i| labels[i] == 1)
        .collect();
    let neg: Vec<usize> = train_idx
        .iter()
        .copied()
        .filter(|&i| labels[i] == 0)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(EvalError::MissingClass);
    }
    let (minority, majority, minority_label) = if pos.len() <= neg.len() {
        (pos, neg, 1u8)
    } else {
        (neg, pos, 0u8)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    match spec.strategy {
        SamplingStrategy::Over => {
            let target = (ratio * majority.len() as f64).round() as usize;
            if minority.len() >= target {
                return Ok(train_idx.to_vec());
            }
            let mut out = train_idx.to_vec();
            for _ in 0..target - minority.len() {
                out.push(minority[rng.random_range(0..minority.len())]);
            }
            Ok(out)
        }
        SamplingStrategy::Under => {
            let target = (minority.len() as f64 / ratio).round() as usize;
            if majority.len() <= target {
                return Ok(train_idx.to_vec());
            }
            let mut pool = majority.clone();
            pool.shuffle(&mut rng);
            let keep: std::collections::BTreeSet<usize> = pool.into_iter().take(target).collect();
            Ok(train_idx
                .iter()
                .copied()
                .filter(|&i| labels[i] == minority_label || keep.contains(&i))
                .collect())
        }
        SamplingStrategy::None => unreachable!(),
    }
}
