//! One-hidden-layer perceptron trained by per-sample backpropagation on
//! squared error.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::encoding::OneHotEncoder;
use crate::data::Dataset;
use crate::error::{ensure, Result};
use crate::rng::seeded;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Logistic hidden layer feeding one logistic output unit.
///
/// Parameters are laid out as the hidden weights row by row (each row ends
/// with its bias) followed by the output weights (ending with the output bias).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    n_in: usize,
    n_hidden: usize,
    params: Vec<f64>,
}

impl Mlp {
    pub fn n_params(n_in: usize, n_hidden: usize) -> usize {
        n_hidden * (n_in + 1) + n_hidden + 1
    }

    /// Weights drawn from Uniform(-0.5, 0.5).
    pub fn random(n_in: usize, n_hidden: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let params = (0..Self::n_params(n_in, n_hidden))
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        Mlp {
            n_in,
            n_hidden,
            params,
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.params.len(), "parameter count mismatch");
        self.params.copy_from_slice(params);
    }

    fn output_offset(&self) -> usize {
        self.n_hidden * (self.n_in + 1)
    }

    fn forward(&self, x: &[f64], hidden: &mut [f64]) -> f64 {
        let stride = self.n_in + 1;
        for (h, w) in hidden.iter_mut().zip(self.params.chunks_exact(stride)) {
            let z: f64 = w[..self.n_in].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[self.n_in];
            *h = sigmoid(z);
        }
        let v = &self.params[self.output_offset()..];
        sigmoid(hidden.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() + v[self.n_hidden])
    }

    pub fn output(&self, x: &[f64]) -> f64 {
        let mut hidden = vec![0.0; self.n_hidden];
        self.forward(x, &mut hidden)
    }

    /// `0.5 * (output - target)^2`.
    pub fn loss(&self, x: &[f64], target: f64) -> f64 {
        let d = self.output(x) - target;
        0.5 * d * d
    }

    /// Gradient of [`Self::loss`] with respect to every parameter.
    pub fn gradient(&self, x: &[f64], target: f64) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let mut hidden = vec![0.0; self.n_hidden];
        self.accumulate_gradient(x, target, &mut hidden, &mut grad);
        grad
    }

    fn accumulate_gradient(&self, x: &[f64], target: f64, hidden: &mut [f64], grad: &mut [f64]) {
        let o = self.forward(x, hidden);
        let delta_out = (o - target) * o * (1.0 - o);
        let off = self.output_offset();
        let stride = self.n_in + 1;
        for (h, &a) in hidden.iter().enumerate() {
            grad[off + h] = delta_out * a;
            let delta_h = delta_out * self.params[off + h] * a * (1.0 - a);
            let row = &mut grad[h * stride..(h + 1) * stride];
            for (g, &xi) in row[..self.n_in].iter_mut().zip(x) {
                *g = delta_h * xi;
            }
            row[self.n_in] = delta_h;
        }
        grad[off + self.n_hidden] = delta_out;
    }

    /// One stochastic gradient step per sample, in the given order.
    fn epoch(&mut self, inputs: &[f64], targets: &[f64], order: &[usize], learning_rate: f64) {
        let mut hidden = vec![0.0; self.n_hidden];
        let mut grad = vec![0.0; self.params.len()];
        for &i in order {
            let x = &inputs[i * self.n_in..(i + 1) * self.n_in];
            self.accumulate_gradient(x, targets[i], &mut hidden, &mut grad);
            for (p, g) in self.params.iter_mut().zip(&grad) {
                *p -= learning_rate * g;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpnnModel {
    encoder: OneHotEncoder,
    net: Mlp,
}

impl BpnnModel {
    /// Network output minus one half.
    pub fn decision_score(&self, x: &[f64]) -> f64 {
        self.net.output(&self.encoder.encode(x)) - 0.5
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }
}

/// Per-epoch mean training loss recorded by [`train_bpnn_traced`].
pub type LossHistory = Vec<f64>;

pub fn train_bpnn(
    train: &Dataset,
    hidden_units: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<BpnnModel> {
    train_bpnn_traced(train, hidden_units, epochs, learning_rate, seed).map(|(m, _)| m)
}

pub fn train_bpnn_traced(
    train: &Dataset,
    hidden_units: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<(BpnnModel, LossHistory)> {
    ensure!(!train.is_empty(), InvalidArgument, "BPNN training set is empty");
    ensure!(hidden_units >= 1, InvalidArgument, "hidden_units must be at least 1");
    ensure!(
        learning_rate > 0.0 && learning_rate.is_finite(),
        InvalidArgument,
        "learning rate must be positive"
    );
    let encoder = OneHotEncoder::new(train.schema());
    let inputs = encoder.encode_rows(train.rows());
    let targets: Vec<f64> = train.labels().iter().map(|l| f64::from(u8::from(l.is_positive()))).collect();
    let n_in = encoder.n_outputs();
    let mut rng = seeded(seed);
    let mut net = Mlp::random(n_in, hidden_units, rng.random());
    let mut order: Vec<usize> = (0..train.n_rows()).collect();
    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        net.epoch(&inputs, &targets, &order, learning_rate);
        let loss = (0..train.n_rows())
            .map(|i| net.loss(&inputs[i * n_in..(i + 1) * n_in], targets[i]))
            .sum::<f64>()
            / train.n_rows() as f64;
        history.push(loss);
    }
    Ok((BpnnModel { encoder, net }, history))
}
