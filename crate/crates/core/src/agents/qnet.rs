//! Fully connected ReLU Q-network with hand-written backpropagation.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::config::OptimizerKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out × in`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros_like(&self) -> Self {
        Self {
            weights: Array2::zeros(self.weights.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }
}

/// Linear output head over ReLU hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    layers: Vec<Dense>,
}

/// Parameter-shaped gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Dense>,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.weights.iter().chain(&l.bias).map(|g| g * g).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights *= s;
            l.bias *= s;
        }
    }
}

fn flatten(layers: &[Dense]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
        .collect()
}

impl QNetwork {
    /// He-uniform hidden weights, LeCun-uniform head, zero biases.
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: &[usize], output: usize, rng: &mut R) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let gain = if i == last { 3.0 } else { 6.0 };
                let bound = (gain / w[0] as f64).sqrt();
                Dense {
                    weights: Array2::from_shape_fn((w[1], w[0]), |_| rng.random_range(-bound..bound)),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Checkpoint("network has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weights.nrows() {
                return Err(Error::Checkpoint(format!("layer {i}: bias length {} != rows {}", l.bias.len(), l.weights.nrows())));
            }
            if i > 0 && layers[i - 1].weights.nrows() != l.weights.ncols() {
                return Err(Error::Checkpoint(format!("layer {i}: input width does not match previous layer")));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weights.nrows()
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.weights.nrows()).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params_flat(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.parameter_count(), "parameter vector length");
        let mut it = params.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = *it.next().expect("length checked");
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    pub fn forward(&self, state: &[f64]) -> Array1<f64> {
        let x = ArrayView2::from_shape((1, state.len()), state).expect("row vector");
        self.forward_batch(x).row(0).to_owned()
    }

    /// `batch × in` to `batch × actions`.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            a = a.dot(&l.weights.t()) + &l.bias;
            if i < last {
                a.mapv_inplace(|v| v.max(0.0));
            }
        }
        a
    }

    /// Mean squared TD error over the batch, on the taken actions only.
    pub fn loss(&self, states: ArrayView2<f64>, actions: &[usize], targets: &[f64]) -> f64 {
        let q = self.forward_batch(states);
        actions
            .iter()
            .zip(targets)
            .enumerate()
            .map(|(j, (&a, &y))| (y - q[[j, a]]).powi(2))
            .sum::<f64>()
            / actions.len() as f64
    }

    pub fn loss_and_gradient(&self, states: ArrayView2<f64>, actions: &[usize], targets: &[f64]) -> (f64, Gradient) {
        let batch = actions.len();
        assert!(batch > 0 && states.nrows() == batch && targets.len() == batch);
        let last = self.layers.len() - 1;
        // Pre-activations per layer; inputs to layer i are relu(zs[i-1]) (or x).
        let mut inputs = vec![states.to_owned()];
        let mut zs = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let z = inputs[i].dot(&l.weights.t()) + &l.bias;
            if i < last {
                inputs.push(z.mapv(|v| v.max(0.0)));
            }
            zs.push(z);
        }
        let q = &zs[last];
        let mut delta = Array2::<f64>::zeros(q.raw_dim());
        let mut loss = 0.0;
        for (j, (&a, &y)) in actions.iter().zip(targets).enumerate() {
            let e = y - q[[j, a]];
            loss += e * e;
            delta[[j, a]] = -2.0 * e / batch as f64;
        }
        loss /= batch as f64;

        let mut grads: Vec<Dense> = self.layers.iter().map(Dense::zeros_like).collect();
        for i in (0..=last).rev() {
            grads[i].weights = delta.t().dot(&inputs[i]);
            grads[i].bias = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].weights);
                back.zip_mut_with(&zs[i - 1], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        (loss, Gradient { layers: grads })
    }
}

/// SGD or Adam with global gradient-norm clipping.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    clip: f64,
    moments: Option<(Vec<Dense>, Vec<Dense>)>,
    t: i32,
}

impl Optimizer {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(kind: OptimizerKind, learning_rate: f64, clip: f64) -> Self {
        Self {
            kind,
            learning_rate,
            clip,
            moments: None,
            t: 0,
        }
    }

    /// Applies one update and returns the gradient norm before clipping.
    pub fn step(&mut self, net: &mut QNetwork, mut grad: Gradient) -> f64 {
        let norm = grad.norm();
        if self.clip > 0.0 && norm > self.clip {
            grad.scale(self.clip / norm);
        }
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in net.layers.iter_mut().zip(&grad.layers) {
                    p.weights.scaled_add(-lr, &g.weights);
                    p.bias.scaled_add(-lr, &g.bias);
                }
            }
            OptimizerKind::Adam => {
                let (m, v) = self.moments.get_or_insert_with(|| {
                    let z: Vec<Dense> = net.layers.iter().map(Dense::zeros_like).collect();
                    (z.clone(), z)
                });
                self.t += 1;
                let c1 = 1.0 - Self::BETA1.powi(self.t);
                let c2 = 1.0 - Self::BETA2.powi(self.t);
                for (((p, g), m), v) in net.layers.iter_mut().zip(&grad.layers).zip(m.iter_mut()).zip(v.iter_mut()) {
                    let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                        *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                        *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
                    };
                    ndarray::Zip::from(&mut p.weights)
                        .and(&g.weights)
                        .and(&mut m.weights)
                        .and(&mut v.weights)
                        .for_each(|p, &g, m, v| update(p, g, m, v));
                    ndarray::Zip::from(&mut p.bias)
                        .and(&g.bias)
                        .and(&mut m.bias)
                        .and(&mut v.bias)
                        .for_each(|p, &g, m, v| update(p, g, m, v));
                }
            }
        }
        norm
    }
}
