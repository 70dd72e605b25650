//! Dense feed-forward network with a softmax association head and a sigmoid fraction head.
//!
//! The last layer has `M + 2` linear outputs: `M + 1` association logits followed by one
//! pre-sigmoid fraction. Hidden layers use ReLU. Training minimizes
//! `CE(assoc) + lambda * (sigmoid(z) - target_fraction)^2`, averaged over the batch, by plain
//! (optionally momentum) gradient descent.

mod encode;
mod io;

pub use encode::{gain_db, raw_features, NormStats, Z_CLIP};
pub use io::FORMAT_VERSION as TEXT_FORMAT_VERSION;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{rng_for, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Pre-training passes over the corpus.
    pub iterations: usize,
    /// Stop pre-training when the best loss has not improved for this many passes.
    pub plateau_patience: usize,
    pub batch_size: usize,
    /// Weight of the fraction-head squared error in the loss.
    pub fraction_weight: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 32],
            learning_rate: 0.01,
            momentum: 0.0,
            iterations: 500,
            plateau_patience: 50,
            batch_size: 64,
            fraction_weight: 1.0,
        }
    }
}

impl NetConfig {
    pub fn input_dim(n_nodes: usize) -> usize {
        2 * n_nodes + 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::InvalidArgument("net.hidden widths must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0) || !(0.0..1.0).contains(&self.momentum) || self.batch_size == 0 {
            return Err(Error::InvalidArgument("net: learning_rate >= 0, momentum in [0, 1), batch_size >= 1".into()));
        }
        Ok(())
    }
}

/// One labelled training pair. `input` is exactly what the network consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target_assoc: usize,
    pub target_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn he_uniform<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / inputs as f64).sqrt();
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.gen_range(-limit..limit)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

/// Network output for one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub assoc_probs: Vec<f64>,
    pub fraction: f64,
}

impl Output {
    /// Most probable association code; ties go to the lower code.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.assoc_probs.iter().enumerate() {
            if p > self.assoc_probs[best] {
                best = k;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
    n_classes: usize,
}

/// Parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    fn scale(&mut self, s: f64) {
        for v in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            v.iter_mut().for_each(|g| *g *= s);
        }
    }
}

impl Mlp {
    /// A He-uniform initialized network for `n_nodes` edge nodes.
    pub fn new(n_nodes: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = rng_for(seed, 0x6e6e);
        let n_classes = n_nodes + 1;
        let mut widths = vec![NetConfig::input_dim(n_nodes)];
        widths.extend_from_slice(hidden);
        widths.push(n_classes + 1);
        let layers = widths.windows(2).map(|w| Dense::he_uniform(w[0], w[1], &mut rng)).collect();
        Self { layers, n_classes }
    }

    /// Build from explicit layers; the last layer must have `n_classes + 1` outputs.
    pub fn from_layers(layers: Vec<Dense>, n_classes: usize) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Shape(format!("layer {k} buffers do not match {}x{}", l.outputs, l.inputs)));
            }
            if k > 0 && layers[k - 1].outputs != l.inputs {
                return Err(Error::Shape(format!("layer {k} expects {} inputs, previous emits {}", l.inputs, layers[k - 1].outputs)));
            }
        }
        if layers.last().map(|l| l.outputs) != Some(n_classes + 1) {
            return Err(Error::Shape(format!("output layer must emit {} values", n_classes + 1)));
        }
        Ok(Self { layers, n_classes })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Zero the output layer so the association head starts uniform.
    pub fn zero_output_layer(&mut self) {
        let last = self.layers.last_mut().expect("non-empty");
        last.weights.iter_mut().for_each(|w| *w = 0.0);
        last.bias.iter_mut().for_each(|b| *b = 0.0);
    }

    /// All pre-activations (index 0 is the input itself, then one entry per layer).
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward_into(&acts[k], &mut out);
            if k + 1 < self.layers.len() {
                out.iter_mut().filter(|v| **v < 0.0).for_each(|v| *v = 0.0);
            }
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Output {
        assert_eq!(x.len(), self.input_dim(), "input dimension");
        let acts = self.activations(x);
        let out = acts.last().expect("output layer");
        Output { assoc_probs: softmax(&out[..self.n_classes]), fraction: sigmoid(out[self.n_classes]) }
    }

    fn sample_loss(&self, out: &[f64], s: &Sample, fraction_weight: f64) -> f64 {
        let logits = &out[..self.n_classes];
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        let frac = sigmoid(out[self.n_classes]);
        (lse - logits[s.target_assoc]) + fraction_weight * (frac - s.target_fraction).powi(2)
    }

    /// Mean loss over `batch` without touching the weights.
    pub fn loss(&self, batch: &[Sample], fraction_weight: f64) -> f64 {
        if batch.is_empty() {
            return 0.0;
        }
        let total: f64 = batch
            .iter()
            .map(|s| {
                let acts = self.activations(&s.input);
                self.sample_loss(acts.last().unwrap(), s, fraction_weight)
            })
            .sum();
        total / batch.len() as f64
    }

    /// Mean loss and its gradient over `batch`, by backpropagation.
    pub fn gradient(&self, batch: &[Sample], fraction_weight: f64) -> (f64, Gradients) {
        let mut grads = Gradients::zeros_like(self);
        let mut loss = 0.0;
        let last = self.layers.len() - 1;
        for s in batch {
            let acts = self.activations(&s.input);
            let out = &acts[last + 1];
            loss += self.sample_loss(out, s, fraction_weight);

            // d loss / d output pre-activation
            let mut delta = softmax(&out[..self.n_classes]);
            delta[s.target_assoc] -= 1.0;
            let frac = sigmoid(out[self.n_classes]);
            delta.push(2.0 * fraction_weight * (frac - s.target_fraction) * frac * (1.0 - frac));

            for k in (0..=last).rev() {
                let layer = &self.layers[k];
                let input = &acts[k];
                let gw = &mut grads.weights[k];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    grads.bias[k][o] += d;
                    if d != 0.0 {
                        let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                        row.iter_mut().zip(input).for_each(|(g, v)| *g += d * v);
                    }
                }
                if k == 0 {
                    break;
                }
                let mut prev = vec![0.0; layer.inputs];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    if d != 0.0 {
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                    }
                }
                // ReLU derivative on the previous layer's output
                for (p, &a) in prev.iter_mut().zip(&acts[k]) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        if !batch.is_empty() {
            let inv = 1.0 / batch.len() as f64;
            grads.scale(inv);
            loss *= inv;
        }
        (loss, grads)
    }

    /// Flattened parameters in layer order (weights row-major, then bias).
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut it = p.iter();
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v = *it.next().expect("parameter count");
            }
        }
    }
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.bias).flat_map(|(w, b)| w.iter().chain(b).copied()).collect()
    }
}

/// Gradient descent with optional classical momentum.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    pub fraction_weight: f64,
    velocity: Option<Gradients>,
    steps: usize,
    last_finite: f64,
}

impl Sgd {
    pub fn new(learning_rate: f64, momentum: f64, fraction_weight: f64) -> Self {
        Self { learning_rate, momentum, fraction_weight, velocity: None, steps: 0, last_finite: f64::NAN }
    }

    pub fn from_config(cfg: &NetConfig) -> Self {
        Self::new(cfg.learning_rate, cfg.momentum, cfg.fraction_weight)
    }

    /// One update on `batch`; returns the batch loss measured before the update.
    pub fn train_step(&mut self, net: &mut Mlp, batch: &[Sample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("training batch is empty".into()));
        }
        let (loss, grads) = net.gradient(batch, self.fraction_weight);
        self.steps += 1;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step: self.steps, batch: batch.len(), last_finite: self.last_finite });
        }
        self.last_finite = loss;
        let lr = self.learning_rate;
        if self.momentum > 0.0 {
            let mu = self.momentum;
            let vel = self.velocity.get_or_insert_with(|| Gradients::zeros_like(net));
            for (k, layer) in net.layers.iter_mut().enumerate() {
                for ((w, v), g) in layer.weights.iter_mut().zip(&mut vel.weights[k]).zip(&grads.weights[k]) {
                    *v = mu * *v - lr * g;
                    *w += *v;
                }
                for ((b, v), g) in layer.bias.iter_mut().zip(&mut vel.bias[k]).zip(&grads.bias[k]) {
                    *v = mu * *v - lr * g;
                    *b += *v;
                }
            }
        } else {
            for (k, layer) in net.layers.iter_mut().enumerate() {
                layer.weights.iter_mut().zip(&grads.weights[k]).for_each(|(w, g)| *w -= lr * g);
                layer.bias.iter_mut().zip(&grads.bias[k]).for_each(|(b, g)| *b -= lr * g);
            }
        }
        Ok(loss)
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}
