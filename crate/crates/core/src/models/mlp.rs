//! Fully connected regressor: ReLU hidden layers, linear scalar output,
//! mean-squared-error loss, mini-batch gradient descent with momentum and
//! inverted dropout on hidden activations.
//!
//! The first layer reads sparse binary rows directly: its pre-activation is
//! the bias plus the weight rows of the set features.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::encode::{FeatureMatrix, FeatureVector};
use crate::error::{Error, Result};
use crate::rng::{self, ChaCha8Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpHyperparams {
    /// Number of hidden layers, 1 to 5.
    pub hidden_layers: usize,
    /// Node division ratio: hidden layer `i` (from 1) has
    /// `max(1, floor(n_in / (ndr * i)))` units.
    pub ndr: usize,
    /// Probability of dropping a hidden unit during training, in [0, 1).
    pub dropout: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpHyperparams {
    fn default() -> Self {
        MlpHyperparams {
            hidden_layers: 2,
            ndr: 8,
            dropout: 0.1,
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 60,
            batch_size: 32,
            seed: 0,
        }
    }
}

pub const MAX_HIDDEN_LAYERS: usize = 5;

impl MlpHyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(1..=MAX_HIDDEN_LAYERS).contains(&self.hidden_layers) {
            return bad(format!("hidden_layers must be in 1..={MAX_HIDDEN_LAYERS}, got {}", self.hidden_layers));
        }
        if self.ndr == 0 {
            return bad("ndr must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be at least 1".into());
        }
        Ok(())
    }

    pub fn widths(&self, n_in: usize) -> Vec<usize> {
        layer_widths(n_in, self.ndr, self.hidden_layers)
    }
}

pub fn layer_widths(n_in: usize, ndr: usize, hidden_layers: usize) -> Vec<usize> {
    (1..=hidden_layers).map(|i| (n_in / (ndr * i)).max(1)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    n_in: usize,
    n_out: usize,
    /// Row-major by input: `w[i * n_out + j]` connects input `i` to unit `j`.
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Layer {
    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Per-sample activations kept for the backward pass.
struct Trace {
    /// Post-activation (and post-dropout) output of every hidden layer.
    hidden: Vec<Vec<f64>>,
    /// Dropout multipliers (0 or 1/(1-p)) per hidden layer; empty when off.
    masks: Vec<Vec<f64>>,
    output: f64,
}

impl Mlp {
    /// He-initialized weights, hidden biases 0.01, output bias 0.
    pub fn new(n_in: usize, widths: &[usize], seed: u64) -> Result<Self> {
        if n_in == 0 || widths.is_empty() || widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid architecture {n_in} -> {widths:?} -> 1")));
        }
        let mut rng = rng::seeded(seed);
        let mut layers = Vec::with_capacity(widths.len() + 1);
        let mut fan_in = n_in;
        for &w in widths.iter().chain(std::iter::once(&1)) {
            let scale = (2.0 / fan_in as f64).sqrt();
            let weights = (0..fan_in * w).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
            let bias = if layers.len() < widths.len() { 0.01 } else { 0.0 };
            layers.push(Layer {
                n_in: fan_in,
                n_out: w,
                w: weights,
                b: vec![bias; w],
            });
            fan_in = w;
        }
        Ok(Mlp { layers })
    }

    pub fn n_features(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.n_out).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// All parameters, layer by layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(&l.b).copied()).collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        let mut at = 0;
        for l in &mut self.layers {
            let (w, b) = (l.w.len(), l.b.len());
            l.w.copy_from_slice(&params[at..at + w]);
            l.b.copy_from_slice(&params[at + w..at + w + b]);
            at += w + b;
        }
        Ok(())
    }

    pub fn set_output_bias(&mut self, value: f64) {
        let last = self.layers.last_mut().expect("at least one layer");
        last.b[0] = value;
    }

    pub fn predict_row(&self, row: &FeatureVector) -> f64 {
        self.forward(row, None, 0.0).output
    }

    fn forward(&self, row: &FeatureVector, mut rng: Option<&mut ChaCha8Rng>, dropout: f64) -> Trace {
        let first = &self.layers[0];
        let mut z = first.b.clone();
        for &i in row.indices() {
            let w = &first.w[i * first.n_out..(i + 1) * first.n_out];
            for (zj, wj) in z.iter_mut().zip(w) {
                *zj += wj;
            }
        }
        let n_hidden = self.layers.len() - 1;
        let mut hidden = Vec::with_capacity(n_hidden);
        let mut masks = Vec::new();
        for li in 0..n_hidden {
            let mut h: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
            if let Some(r) = rng.as_deref_mut() {
                if dropout > 0.0 {
                    let keep = 1.0 / (1.0 - dropout);
                    let mask: Vec<f64> = (0..h.len()).map(|_| if r.random::<f64>() < dropout { 0.0 } else { keep }).collect();
                    for (hj, m) in h.iter_mut().zip(&mask) {
                        *hj *= m;
                    }
                    masks.push(mask);
                }
            }
            let next = &self.layers[li + 1];
            z = next.b.clone();
            for (i, &hi) in h.iter().enumerate() {
                if hi != 0.0 {
                    let w = &next.w[i * next.n_out..(i + 1) * next.n_out];
                    for (zj, wj) in z.iter_mut().zip(w) {
                        *zj += hi * wj;
                    }
                }
            }
            hidden.push(h);
        }
        Trace {
            hidden,
            masks,
            output: z[0],
        }
    }

    /// Adds `scale * d(output)/d(params)` for one sample into `grad`, laid out
    /// like [`Mlp::params`].
    fn backward(&self, row: &FeatureVector, trace: &Trace, scale: f64, grad: &mut [f64]) {
        let offsets: Vec<usize> = self
            .layers
            .iter()
            .scan(0, |acc, l| {
                let o = *acc;
                *acc += l.param_count();
                Some(o)
            })
            .collect();
        let n_hidden = self.layers.len() - 1;
        let mut delta = vec![scale];
        for li in (0..=n_hidden).rev() {
            let layer = &self.layers[li];
            let off = offsets[li];
            let (gw, gb) = grad[off..off + layer.param_count()].split_at_mut(layer.w.len());
            for (g, d) in gb.iter_mut().zip(&delta) {
                *g += d;
            }
            if li == 0 {
                for &i in row.indices() {
                    for (g, d) in gw[i * layer.n_out..(i + 1) * layer.n_out].iter_mut().zip(&delta) {
                        *g += d;
                    }
                }
                break;
            }
            let input = &trace.hidden[li - 1];
            let mut prev = vec![0.0; layer.n_in];
            for (i, &xi) in input.iter().enumerate() {
                let w = &layer.w[i * layer.n_out..(i + 1) * layer.n_out];
                let g = &mut gw[i * layer.n_out..(i + 1) * layer.n_out];
                let mut acc = 0.0;
                for j in 0..layer.n_out {
                    g[j] += xi * delta[j];
                    acc += w[j] * delta[j];
                }
                prev[i] = acc;
            }
            // Through dropout and ReLU: a unit contributes only if it fired and was kept.
            let mask = trace.masks.get(li - 1);
            for (i, p) in prev.iter_mut().enumerate() {
                if input[i] <= 0.0 {
                    *p = 0.0;
                } else if let Some(m) = mask {
                    *p *= m[i];
                }
            }
            delta = prev;
        }
    }

    /// Batch loss `mean((output - y)^2)` and its gradient, dropout off.
    pub fn loss_and_grad(&self, rows: &[FeatureVector], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
        if rows.len() != targets.len() || rows.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: targets.len(),
                actual: rows.len(),
            });
        }
        self.check_rows(rows)?;
        let mut grad = vec![0.0; self.param_count()];
        let b = rows.len() as f64;
        let mut loss = 0.0;
        for (row, &y) in rows.iter().zip(targets) {
            let trace = self.forward(row, None, 0.0);
            let err = trace.output - y;
            loss += err * err / b;
            self.backward(row, &trace, 2.0 * err / b, &mut grad);
        }
        Ok((loss, grad))
    }

    fn check_rows(&self, rows: &[FeatureVector]) -> Result<()> {
        match rows.iter().find(|r| r.len() != self.n_features()) {
            Some(r) => Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: r.len(),
            }),
            None => Ok(()),
        }
    }
}

/// Builds the network from `hp`, starts the output bias at the target mean and
/// trains for `hp.epochs` passes over shuffled mini-batches.
pub fn train_mlp(x: &FeatureMatrix, hp: &MlpHyperparams) -> Result<Mlp> {
    hp.validate()?;
    if x.is_empty() {
        return Err(Error::InvalidArgument("cannot train an MLP on an empty matrix".into()));
    }
    let mut net = Mlp::new(x.n_features(), &hp.widths(x.n_features()), rng::derive_seed(hp.seed, 0))?;
    let mean = x.targets().iter().sum::<f64>() / x.len() as f64;
    net.set_output_bias(mean);
    fit(&mut net, x.rows(), x.targets(), hp)?;
    Ok(net)
}

fn fit(net: &mut Mlp, rows: &[FeatureVector], targets: &[f64], hp: &MlpHyperparams) -> Result<()> {
    net.check_rows(rows)?;
    let mut rng = rng::seeded(rng::derive_seed(hp.seed, 1));
    let mut params = net.params();
    let mut velocity = vec![0.0; params.len()];
    let mut grad = vec![0.0; params.len()];
    let mut order: Vec<usize> = (0..rows.len()).collect();
    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(hp.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let b = batch.len() as f64;
            for &i in batch {
                let trace = net.forward(&rows[i], Some(&mut rng), hp.dropout);
                let err = trace.output - targets[i];
                epoch_loss += err * err;
                net.backward(&rows[i], &trace, 2.0 * err / b, &mut grad);
            }
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = hp.momentum * *v - hp.learning_rate * g;
                *p += *v;
            }
            net.set_params(&params)?;
        }
        if !epoch_loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Training(format!("MLP diverged in epoch {}", epoch + 1)));
        }
    }
    Ok(())
}
