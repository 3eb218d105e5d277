//! K-nearest neighbors over standardized features.

use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use super::MlError;

/// Stores the (already standardized) training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnState {
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub data: Vec<f64>,
    pub labels: Vec<u8>,
}

pub fn fit_knn(train: &FeatureMatrix, k: usize) -> Result<KnnState, MlError> {
    if train.rows() == 0 {
        return Err(MlError::EmptyTraining);
    }
    if k == 0 {
        return Err(MlError::InvalidParam {
            algorithm: "knn",
            message: "k must be at least 1".into(),
        });
    }
    let mut data = Vec::with_capacity(train.rows() * train.cols());
    for i in 0..train.rows() {
        data.extend_from_slice(train.row(i));
    }
    Ok(KnnState {
        k,
        n: train.rows(),
        d: train.cols(),
        data,
        labels: train.labels.clone(),
    })
}

/// Majority vote of the k nearest by Euclidean distance. Distance ties break
/// toward the lower training index; vote ties toward the nearest neighbor's
/// label.
pub fn predict_knn(state: &KnnState, row: &[f64]) -> u8 {
    let k = state.k.min(state.n);
    // (squared distance, index) for all training rows, then partial select.
    let mut dists: Vec<(f64, usize)> = (0..state.n)
        .map(|i| {
            let base = i * state.d;
            let mut acc = 0.0;
            for j in 0..state.d {
                let delta = state.data[base + j] - row[j];
                acc += delta * delta;
            }
            (acc, i)
        })
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| {
        a.0.partial_cmp(&b.0)
            .expect("finite distances")
            .then(a.1.cmp(&b.1))
    };
    dists.select_nth_unstable_by(k - 1, cmp);
    let mut nearest: Vec<(f64, usize)> = dists[..k].to_vec();
    nearest.sort_by(cmp);

    let votes = nearest
        .iter()
        .filter(|(_, i)| state.labels[*i] == 1)
        .count();
    if 2 * votes > k {
        1
    } else if 2 * votes < k {
        0
    } else {
        state.labels[nearest[0].1]
    }
}
