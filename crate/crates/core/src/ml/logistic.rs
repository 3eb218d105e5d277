//! L2-regularized logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use super::MlError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticState {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Objective: mean cross-entropy plus `(lambda/2) * ||w||^2` (bias excluded).
pub fn logistic_loss(w: &[f64], bias: f64, data: &FeatureMatrix, lambda: f64) -> f64 {
    let n = data.rows() as f64;
    let mut loss = 0.0;
    for i in 0..data.rows() {
        let row = data.row(i);
        let z = bias + dot(row, w);
        let y = data.labels[i] as f64;
        // Numerically stable: log(1 + e^z) - y z
        loss += softplus(z) - y * z;
    }
    loss / n + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// Analytic gradient of [`logistic_loss`] wrt weights and bias.
pub fn logistic_grad(w: &[f64], bias: f64, data: &FeatureMatrix, lambda: f64) -> (Vec<f64>, f64) {
    let n = data.rows() as f64;
    let d = data.cols();
    let mut gw = vec![0.0; d];
    let mut gb = 0.0;
    for i in 0..data.rows() {
        let row = data.row(i);
        let err = sigmoid(bias + dot(row, w)) - data.labels[i] as f64;
        for j in 0..d {
            gw[j] += err * row[j];
        }
        gb += err;
    }
    for j in 0..d {
        gw[j] = gw[j] / n + lambda * w[j];
    }
    (gw, gb / n)
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else if z < -30.0 {
        0.0
    } else {
        (1.0 + z.exp()).ln()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gradient descent with step halving on any loss increase. Stops when the
/// gradient's infinity norm drops under `1e-6`; otherwise returns the best
/// iterate with `converged = false`.
pub fn fit_logistic(
    data: &FeatureMatrix,
    lambda: f64,
    max_iter: usize,
) -> Result<LogisticState, MlError> {
    if data.rows() == 0 {
        return Err(MlError::EmptyTraining);
    }
    let d = data.cols();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut lr = 1.0f64;
    let mut loss = logistic_loss(&w, b, data, lambda);
    let mut converged = false;

    for _ in 0..max_iter {
        let (gw, gb) = logistic_grad(&w, b, data, lambda);
        let gmax = gw
            .iter()
            .chain(std::iter::once(&gb))
            .fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < 1e-6 {
            converged = true;
            break;
        }
        loop {
            let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - lr * gi).collect();
            let cand_b = b - lr * gb;
            let cand_loss = logistic_loss(&cand_w, cand_b, data, lambda);
            if cand_loss <= loss || lr < 1e-12 {
                w = cand_w;
                b = cand_b;
                loss = cand_loss;
                lr = (lr * 1.1).min(16.0);
                break;
            }
            lr *= 0.5;
        }
    }
    if !converged {
        log::warn!(target: "ml", "logistic regression hit the iteration cap (lambda={lambda})");
    }
    Ok(LogisticState {
        weights: w,
        bias: b,
        converged,
    })
}

pub fn predict_logistic(state: &LogisticState, row: &[f64]) -> u8 {
    if sigmoid(state.bias + dot(row, &state.weights)) >= 0.5 {
        1
    } else {
        0
    }
}
