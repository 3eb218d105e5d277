//! Per-feature z-score standardization fitted on training rows only.

use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use super::MlError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    /// Fit on training rows (population standard deviation). Needs at least
    /// two rows.
    pub fn fit(train: &FeatureMatrix) -> Result<Self, MlError> {
        if train.rows() < 2 {
            return Err(MlError::EmptyTraining);
        }
        let n = train.rows() as f64;
        let d = train.cols();
        let mut means = vec![0.0; d];
        for i in 0..train.rows() {
            for (j, v) in train.row(i).iter().enumerate() {
                means[j] += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; d];
        for i in 0..train.rows() {
            for (j, v) in train.row(i).iter().enumerate() {
                let delta = v - means[j];
                vars[j] += delta * delta;
            }
        }
        let stds = vars.iter().map(|v| (v / n).sqrt()).collect();
        Ok(Standardizer { means, stds })
    }

    /// Transform one row in place. Zero-variance features map to 0.
    pub fn apply_row(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            if self.stds[j] == 0.0 {
                *v = 0.0;
            } else {
                *v = (*v - self.means[j]) / self.stds[j];
            }
        }
    }

    pub fn transform(&self, m: &FeatureMatrix) -> FeatureMatrix {
        let mut rows = Vec::with_capacity(m.rows());
        for i in 0..m.rows() {
            let mut row = m.row(i).to_vec();
            self.apply_row(&mut row);
            rows.push(row);
        }
        FeatureMatrix::from_rows(rows, m.labels.clone()).expect("finite by construction")
    }
}
