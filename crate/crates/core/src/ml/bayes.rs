//! Gaussian naive Bayes with variance smoothing.

use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use super::MlError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesState {
    pub log_prior: [f64; 2],
    /// Per class: d means and d smoothed variances.
    pub means: [Vec<f64>; 2],
    pub vars: [Vec<f64>; 2],
}

/// Fit per-class Gaussians. Variance smoothing adds
/// `1e-9 * max feature variance` (over all training rows) to every variance.
pub fn fit_bayes(data: &FeatureMatrix) -> Result<BayesState, MlError> {
    let n = data.rows();
    let d = data.cols();
    let pos = data.positives();
    if pos == 0 || pos == n {
        return Err(MlError::SingleClass);
    }

    let mut counts = [0usize; 2];
    let mut means = [vec![0.0; d], vec![0.0; d]];
    for i in 0..n {
        let c = data.labels[i] as usize;
        counts[c] += 1;
        for (j, v) in data.row(i).iter().enumerate() {
            means[c][j] += v;
        }
    }
    for c in 0..2 {
        for j in 0..d {
            means[c][j] /= counts[c] as f64;
        }
    }
    let mut vars = [vec![0.0; d], vec![0.0; d]];
    for i in 0..n {
        let c = data.labels[i] as usize;
        for (j, v) in data.row(i).iter().enumerate() {
            let delta = v - means[c][j];
            vars[c][j] += delta * delta;
        }
    }
    for c in 0..2 {
        for j in 0..d {
            vars[c][j] /= counts[c] as f64;
        }
    }

    // Global per-feature variance for the smoothing scale.
    let mut gmean = vec![0.0; d];
    for i in 0..n {
        for (j, v) in data.row(i).iter().enumerate() {
            gmean[j] += v;
        }
    }
    for g in &mut gmean {
        *g /= n as f64;
    }
    let mut gvar_max: f64 = 0.0;
    for j in 0..d {
        let mut acc = 0.0;
        for i in 0..n {
            let delta = data.row(i)[j] - gmean[j];
            acc += delta * delta;
        }
        gvar_max = gvar_max.max(acc / n as f64);
    }
    let eps = 1e-9 * gvar_max.max(1e-12);
    for c in 0..2 {
        for v in &mut vars[c] {
            *v += eps;
        }
    }

    Ok(BayesState {
        log_prior: [
            ((counts[0] as f64) / n as f64).ln(),
            ((counts[1] as f64) / n as f64).ln(),
        ],
        means,
        vars,
    })
}

/// Class posteriors `[p0, p1]`, normalized in log space; they sum to 1.
pub fn posterior(state: &BayesState, row: &[f64]) -> [f64; 2] {
    let mut logp = [0.0f64; 2];
    for c in 0..2 {
        let mut acc = state.log_prior[c];
        for (j, v) in row.iter().enumerate() {
            let var = state.vars[c][j];
            let delta = v - state.means[c][j];
            acc += -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + delta * delta / var);
        }
        logp[c] = acc;
    }
    let m = logp[0].max(logp[1]);
    let e0 = (logp[0] - m).exp();
    let e1 = (logp[1] - m).exp();
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}

pub fn predict_bayes(state: &BayesState, row: &[f64]) -> u8 {
    let p = posterior(state, row);
    if p[1] >= p[0] {
        1
    } else {
        0
    }
}
