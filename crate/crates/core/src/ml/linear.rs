//! Linear regression on {0,1} targets via normal equations, thresholded at
//! 0.5 to produce labels.

use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use super::MlError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearState {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear_system(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .expect("finite")
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Ordinary least squares with a bias column and a small ridge jitter on the
/// diagonal for rank safety.
pub fn fit_linear(data: &FeatureMatrix) -> Result<LinearState, MlError> {
    let n = data.rows();
    let d = data.cols();
    if n == 0 {
        return Err(MlError::EmptyTraining);
    }
    let dim = d + 1; // bias last
    let mut gram = vec![vec![0.0; dim]; dim];
    let mut rhs = vec![0.0; dim];
    for i in 0..n {
        let row = data.row(i);
        let y = data.labels[i] as f64;
        for j in 0..d {
            for k in j..d {
                gram[j][k] += row[j] * row[k];
            }
            gram[j][d] += row[j];
            rhs[j] += row[j] * y;
        }
        gram[d][d] += 1.0;
        rhs[d] += y;
    }
    for j in 0..dim {
        for k in 0..j {
            gram[j][k] = gram[k][j];
        }
    }
    let trace: f64 = (0..dim).map(|j| gram[j][j]).sum();
    let jitter = 1e-8 * (trace / dim as f64 + 1.0);
    for (j, row) in gram.iter_mut().enumerate() {
        row[j] += jitter;
    }
    let solution =
        solve_linear_system(gram, rhs).ok_or(MlError::Numeric("singular normal equations"))?;
    let (weights, bias) = solution.split_at(d);
    Ok(LinearState {
        weights: weights.to_vec(),
        bias: bias[0],
    })
}

pub fn predict_linear(state: &LinearState, row: &[f64]) -> u8 {
    let score: f64 = state.bias
        + row
            .iter()
            .zip(&state.weights)
            .map(|(x, w)| x * w)
            .sum::<f64>();
    if score >= 0.5 {
        1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // 2x + y = 5; x + 3y = 10 -> x = 1, y = 3
        let x = solve_linear_system(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fits_separable_data() {
        let data = FeatureMatrix::from_rows(
            vec![vec![0.0], vec![0.2], vec![0.8], vec![1.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let m = fit_linear(&data).unwrap();
        assert_eq!(predict_linear(&m, &[0.1]), 0);
        assert_eq!(predict_linear(&m, &[0.9]), 1);
    }

    #[test]
    fn collinear_features_survive_via_jitter() {
        let data = FeatureMatrix::from_rows(
            vec![
                vec![1.0, 2.0],
                vec![2.0, 4.0],
                vec![3.0, 6.0],
                vec![4.0, 8.0],
            ],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let m = fit_linear(&data).unwrap();
        assert_eq!(predict_linear(&m, &[1.0, 2.0]), 0);
        assert_eq!(predict_linear(&m, &[4.0, 8.0]), 1);
    }
}
