//! Linear soft-margin SVM trained by full-batch hinge-loss subgradient
//! descent (Pegasos-style schedule with projection).
//!
//! This is a linear stand-in for kernel C-SVC: the hyper-parameter grid still
//! exposes `C`, the decision function is `sign(w.x + b)`.

use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use super::MlError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmState {
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub fn fit_svm(data: &FeatureMatrix, c: f64, epochs: usize) -> Result<SvmState, MlError> {
    let n = data.rows();
    if n == 0 {
        return Err(MlError::EmptyTraining);
    }
    if c <= 0.0 {
        return Err(MlError::InvalidParam {
            algorithm: "svm",
            message: format!("C must be positive, got {c}"),
        });
    }
    let d = data.cols();
    let lambda = 1.0 / (c * n as f64);
    let radius = 1.0 / lambda.sqrt();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for t in 1..=epochs {
        let eta = 1.0 / (lambda * t as f64);
        // Subgradient of the averaged hinge loss over margin violators.
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for i in 0..n {
            let row = data.row(i);
            let y = if data.labels[i] == 1 { 1.0 } else { -1.0 };
            let margin = y * (b + dot(row, &w));
            if margin < 1.0 {
                for j in 0..d {
                    gw[j] += y * row[j];
                }
                gb += y;
            }
        }
        let scale = 1.0 - eta * lambda; // = 1 - 1/t
        let step = eta / n as f64;
        for j in 0..d {
            w[j] = scale * w[j] + step * gw[j];
        }
        b += step.min(1.0) * gb;

        // Project onto the ball Pegasos guarantees the optimum lives in.
        let norm = dot(&w, &w).sqrt();
        if norm > radius {
            let shrink = radius / norm;
            for wj in &mut w {
                *wj *= shrink;
            }
        }
    }
    Ok(SvmState {
        weights: w,
        bias: b,
    })
}

pub fn predict_svm(state: &SvmState, row: &[f64]) -> u8 {
    if state.bias + dot(row, &state.weights) >= 0.0 {
        1
    } else {
        0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_linearly_separable_data() {
        let data = FeatureMatrix::from_rows(
            vec![
                vec![-2.0, -1.0],
                vec![-1.5, -2.0],
                vec![-1.0, -1.5],
                vec![1.0, 1.5],
                vec![1.5, 1.0],
                vec![2.0, 2.0],
            ],
            vec![0, 0, 0, 1, 1, 1],
        )
        .unwrap();
        for c in [0.1, 1.0, 10.0] {
            let m = fit_svm(&data, c, 200).unwrap();
            for i in 0..data.rows() {
                assert_eq!(predict_svm(&m, data.row(i)), data.labels[i], "C={c}");
            }
        }
    }

    #[test]
    fn invalid_c_is_rejected() {
        let data = FeatureMatrix::from_rows(vec![vec![0.0], vec![1.0]], vec![0, 1]).unwrap();
        assert!(fit_svm(&data, 0.0, 10).is_err());
    }

    #[test]
    fn deterministic() {
        let data = FeatureMatrix::from_rows(
            vec![vec![-1.0], vec![-0.5], vec![0.5], vec![1.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let a = fit_svm(&data, 1.0, 150).unwrap();
        let b = fit_svm(&data, 1.0, 150).unwrap();
        assert_eq!(a, b);
    }
}
