//! Multilayer perceptron: ReLU hidden layers, sigmoid output, cross-entropy
//! loss, mini-batch backpropagation.
//!
//! Two training regimes sit on top of the same network: a fixed epoch count,
//! and an adaptive schedule that halves the learning rate and restores the
//! best checkpoint whenever a dev-set F-measure epoch brings no improvement,
//! stopping after four consecutive misses and returning the best checkpoint.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use crate::eval::ConfusionCounts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpState {
    /// Layer sizes, input first, 1 output last.
    pub dims: Vec<usize>,
    /// Row-major `out x in` weight matrices per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpState {
    /// Xavier-uniform initialization driven by the given RNG.
    pub fn init(dims: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2 && *dims.last().unwrap() == 1);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 1..dims.len() {
            let (fan_in, fan_out) = (dims[l - 1], dims[l]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        MlpState {
            dims: dims.to_vec(),
            weights,
            biases,
        }
    }

    /// Pre-activations and activations per layer; `acts[0]` is the input.
    fn forward_full(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let layers = self.weights.len();
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(layers);
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        for l in 0..layers {
            let fan_in = self.dims[l];
            let fan_out = self.dims[l + 1];
            let mut z = vec![0.0; fan_out];
            let input = &acts[l];
            for o in 0..fan_out {
                let mut acc = self.biases[l][o];
                let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                for i in 0..fan_in {
                    acc += row[i] * input[i];
                }
                z[o] = acc;
            }
            let a: Vec<f64> = if l == layers - 1 {
                z.iter().map(|&v| sigmoid(v)).collect()
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            zs.push(z);
            acts.push(a);
        }
        (zs, acts)
    }

    pub fn predict_prob(&self, x: &[f64]) -> f64 {
        let (_, acts) = self.forward_full(x);
        acts.last().unwrap()[0]
    }

    pub fn predict_label(&self, x: &[f64]) -> u8 {
        if self.predict_prob(x) >= 0.5 {
            1
        } else {
            0
        }
    }

    /// Mean binary cross-entropy over the given rows.
    pub fn loss(&self, data: &FeatureMatrix, idx: &[usize]) -> f64 {
        let mut acc = 0.0;
        for &i in idx {
            let p = self.predict_prob(data.row(i)).clamp(1e-12, 1.0 - 1e-12);
            let y = data.labels[i] as f64;
            acc += -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
        }
        acc / idx.len() as f64
    }

    /// Mean gradients over a batch, same shapes as `weights`/`biases`.
    pub fn batch_grads(
        &self,
        data: &FeatureMatrix,
        idx: &[usize],
    ) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let layers = self.weights.len();
        let mut gw: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();

        for &i in idx {
            let x = data.row(i);
            let y = data.labels[i] as f64;
            let (zs, acts) = self.forward_full(x);

            // Output delta for sigmoid + cross-entropy.
            let mut delta = vec![acts[layers][0] - y];
            for l in (0..layers).rev() {
                let fan_in = self.dims[l];
                let fan_out = self.dims[l + 1];
                for o in 0..fan_out {
                    let dz = delta[o];
                    gb[l][o] += dz;
                    let row = &mut gw[l][o * fan_in..(o + 1) * fan_in];
                    for (k, a) in acts[l].iter().enumerate() {
                        row[k] += dz * a;
                    }
                }
                if l > 0 {
                    let mut prev = vec![0.0; fan_in];
                    for (k, p) in prev.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (o, dz) in delta.iter().enumerate() {
                            acc += self.weights[l][o * fan_in + k] * dz;
                        }
                        *p = if zs[l - 1][k] > 0.0 { acc } else { 0.0 };
                    }
                    delta = prev;
                }
            }
        }
        let scale = 1.0 / idx.len() as f64;
        for g in gw.iter_mut().chain(gb.iter_mut()) {
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
        (gw, gb)
    }

    fn apply_grads(&mut self, gw: &[Vec<f64>], gb: &[Vec<f64>], lr: f64) {
        for l in 0..self.weights.len() {
            for (w, g) in self.weights[l].iter_mut().zip(&gw[l]) {
                *w -= lr * g;
            }
            for (b, g) in self.biases[l].iter_mut().zip(&gb[l]) {
                *b -= lr * g;
            }
        }
    }

    /// One pass over all training rows in shuffled mini-batches.
    pub fn train_epoch(
        &mut self,
        data: &FeatureMatrix,
        lr: f64,
        batch: usize,
        rng: &mut ChaCha8Rng,
    ) {
        let mut order: Vec<usize> = (0..data.rows()).collect();
        order.shuffle(rng);
        for chunk in order.chunks(batch.max(1)) {
            let (gw, gb) = self.batch_grads(data, chunk);
            self.apply_grads(&gw, &gb, lr);
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Fixed-epoch training (the simple DNN regime).
pub fn train_fixed(
    mut net: MlpState,
    data: &FeatureMatrix,
    lr: f64,
    epochs: usize,
    batch: usize,
    rng: &mut ChaCha8Rng,
) -> MlpState {
    for _ in 0..epochs {
        net.train_epoch(data, lr, batch, rng);
    }
    net
}

/// Anything the adaptive schedule can drive: checkpointable, trainable one
/// epoch at a time, and scoreable on the dev set.
pub trait AdaptiveTrainable {
    type Snapshot: Clone;
    fn snapshot(&self) -> Self::Snapshot;
    fn restore(&mut self, snapshot: &Self::Snapshot);
    fn run_epoch(&mut self, lr: f64);
    fn dev_f_measure(&mut self) -> f64;
}

/// One schedule step, for auditing the miss/halve/restore protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleStep {
    pub epoch: usize,
    pub dev_f: f64,
    pub improved: bool,
    pub lr_after: f64,
    pub consecutive_misses: u32,
}

/// Adaptive learning-rate schedule: train an epoch; on dev F-measure
/// improvement checkpoint and reset the miss counter; on a miss restore the
/// best checkpoint and halve the learning rate; stop after `max_misses`
/// consecutive misses (or `max_epochs`) and leave the model at the best
/// checkpoint.
pub fn run_adaptive<T: AdaptiveTrainable>(
    model: &mut T,
    initial_lr: f64,
    max_misses: u32,
    max_epochs: usize,
) -> Vec<ScheduleStep> {
    let mut best = model.snapshot();
    let mut best_f = model.dev_f_measure();
    let mut lr = initial_lr;
    let mut misses = 0u32;
    let mut steps = Vec::new();

    for epoch in 1..=max_epochs {
        model.run_epoch(lr);
        let f = model.dev_f_measure();
        let improved = f > best_f;
        if improved {
            best_f = f;
            best = model.snapshot();
            misses = 0;
        } else {
            model.restore(&best);
            lr /= 2.0;
            misses += 1;
        }
        steps.push(ScheduleStep {
            epoch,
            dev_f: f,
            improved,
            lr_after: lr,
            consecutive_misses: misses,
        });
        if misses >= max_misses {
            break;
        }
    }
    model.restore(&best);
    steps
}

/// The real MLP plugged into the adaptive schedule.
pub struct MlpAdaptive<'a> {
    pub net: MlpState,
    pub train: &'a FeatureMatrix,
    pub dev: &'a FeatureMatrix,
    pub batch: usize,
    pub rng: ChaCha8Rng,
}

impl AdaptiveTrainable for MlpAdaptive<'_> {
    type Snapshot = MlpState;

    fn snapshot(&self) -> MlpState {
        self.net.clone()
    }

    fn restore(&mut self, snapshot: &MlpState) {
        self.net = snapshot.clone();
    }

    fn run_epoch(&mut self, lr: f64) {
        self.net
            .train_epoch(self.train, lr, self.batch, &mut self.rng);
    }

    fn dev_f_measure(&mut self) -> f64 {
        let truth = &self.dev.labels;
        let predicted: Vec<u8> = (0..self.dev.rows())
            .map(|i| self.net.predict_label(self.dev.row(i)))
            .collect();
        ConfusionCounts::from_predictions(truth, &predicted).f_measure()
    }
}
