//! Fully connected value network 17 → 128 → 64 → 32 → 8 → 1 with tanh hidden
//! units and a linear output, trained by plain SGD on mean squared error.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::error::{Result, SolverError};
use crate::features::{FeatureVector, NUM_FEATURES};
use crate::rng;

pub const LAYER_DIMS: [usize; 6] = [NUM_FEATURES, 128, 64, 32, 8, 1];

const MAGIC: &[u8; 8] = b"CVRPTWVN";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `fan_in × fan_out`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueNet {
    pub layers: Vec<Layer>,
}

/// Same shape as the network; one entry per parameter.
pub type Gradients = ValueNet;

impl ValueNet {
    pub fn zeros() -> Self {
        Self {
            layers: LAYER_DIMS
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
        }
    }

    /// Weights uniform in ±1/√fan_in, biases zero. Deterministic in `seed`.
    pub fn init(seed: u64) -> Self {
        let mut net = Self::zeros();
        for (k, layer) in net.layers.iter_mut().enumerate() {
            let mut r = rng::stream(seed, &[0x1417, k as u64]);
            let scale = 1.0 / (layer.weights.nrows() as f64).sqrt();
            layer
                .weights
                .mapv_inplace(|_| r.gen_range(-1.0..1.0) * scale);
        }
        net
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn forward(&self, x: &FeatureVector) -> Result<f64> {
        if !x.is_finite() {
            return Err(SolverError::NonFiniteInput);
        }
        Ok(self.forward_batch(std::slice::from_ref(x))[0])
    }

    /// Values for a batch of inputs. Inputs are assumed finite.
    pub fn forward_batch(&self, xs: &[FeatureVector]) -> Vec<f64> {
        if xs.is_empty() {
            return Vec::new();
        }
        let acts = self.activations(stack(xs));
        acts.last().expect("output layer").column(0).to_vec()
    }

    /// Inputs followed by every layer's output.
    fn activations(&self, x: Array2<f64>) -> Vec<Array2<f64>> {
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x);
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = acts[k].dot(&layer.weights);
            z += &layer.bias;
            if k < last {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        acts
    }

    /// Mean squared error over the batch and its gradient with respect to
    /// every weight and bias.
    pub fn loss_and_gradients(&self, batch: &[(FeatureVector, f64)]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(SolverError::EmptyBatch);
        }
        let xs: Vec<FeatureVector> = batch.iter().map(|(x, _)| *x).collect();
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(SolverError::NonFiniteInput);
        }
        let targets = Array1::from_iter(batch.iter().map(|(_, y)| *y));
        let acts = self.activations(stack(&xs));
        let out = acts.last().expect("output layer").column(0).to_owned();
        let err = &out - &targets;
        let n = batch.len() as f64;
        let loss = err.iter().map(|e| e * e).sum::<f64>() / n;
        if !loss.is_finite() {
            return Err(SolverError::Divergence { loss });
        }

        let mut grads = Self::zeros();
        let mut delta = (err * (2.0 / n)).insert_axis(Axis(1));
        for k in (0..self.layers.len()).rev() {
            grads.layers[k].weights = acts[k].t().dot(&delta);
            grads.layers[k].bias = delta.sum_axis(Axis(0));
            if k > 0 {
                let mut back = delta.dot(&self.layers[k].weights.t());
                back.zip_mut_with(&acts[k], |b, &h| *b *= 1.0 - h * h);
                delta = back;
            }
        }
        Ok((loss, grads))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Magic, format version, layer count, layer widths (all `u32` LE), then
    /// per layer the row-major weights and the biases as `f64` LE.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * (2 + LAYER_DIMS.len()) + 8 * self.num_params());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.layers[0].weights.nrows() as u32).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.weights.ncols() as u32).to_le_bytes());
        }
        for l in &self.layers {
            for v in l.weights.iter().chain(l.bias.iter()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| SolverError::Checkpoint(m.to_string());
        let mut cur = Reader { bytes, pos: 0 };
        if cur.take(8).ok_or_else(|| bad("truncated header"))? != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = cur.u32().ok_or_else(|| bad("truncated header"))?;
        if version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let n_layers = cur.u32().ok_or_else(|| bad("truncated header"))? as usize;
        if n_layers != LAYER_DIMS.len() - 1 {
            return Err(bad(&format!(
                "expected {} layers, found {n_layers}",
                LAYER_DIMS.len() - 1
            )));
        }
        let mut dims = Vec::with_capacity(n_layers + 1);
        for _ in 0..=n_layers {
            dims.push(cur.u32().ok_or_else(|| bad("truncated header"))? as usize);
        }
        if dims != LAYER_DIMS {
            return Err(bad(&format!(
                "layer widths {dims:?} do not match {LAYER_DIMS:?}"
            )));
        }
        let mut net = Self::zeros();
        for l in &mut net.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v = cur.f64().ok_or_else(|| bad("truncated parameters"))?;
            }
        }
        if cur.pos != bytes.len() {
            return Err(bad("trailing bytes after parameters"));
        }
        Ok(net)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self) -> Option<f64> {
        self.take(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }
}

fn stack(xs: &[FeatureVector]) -> Array2<f64> {
    Array2::from_shape_fn((xs.len(), NUM_FEATURES), |(r, c)| xs[r].0[c])
}

/// Stochastic gradient descent with optional classical momentum (off by
/// default).
#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Option<Gradients>,
}

impl Sgd {
    pub fn new(learning_rate: f64, momentum: f64) -> Self {
        Self {
            learning_rate,
            momentum,
            velocity: None,
        }
    }

    /// One gradient step on the batch; returns the loss before the step.
    pub fn step(&mut self, net: &mut ValueNet, batch: &[(FeatureVector, f64)]) -> Result<f64> {
        let (loss, grads) = net.loss_and_gradients(batch)?;
        let lr = self.learning_rate;
        if self.momentum > 0.0 {
            let mu = self.momentum;
            let vel = self.velocity.get_or_insert_with(ValueNet::zeros);
            for ((l, v), g) in net
                .layers
                .iter_mut()
                .zip(&mut vel.layers)
                .zip(&grads.layers)
            {
                v.weights.zip_mut_with(&g.weights, |v, &g| *v = mu * *v + g);
                v.bias.zip_mut_with(&g.bias, |v, &g| *v = mu * *v + g);
                l.weights.scaled_add(-lr, &v.weights);
                l.bias.scaled_add(-lr, &v.bias);
            }
        } else {
            for (l, g) in net.layers.iter_mut().zip(&grads.layers) {
                l.weights.scaled_add(-lr, &g.weights);
                l.bias.scaled_add(-lr, &g.bias);
            }
        }
        Ok(loss)
    }
}

/// Plain SGD step at `learning_rate`; returns the pre-step loss.
pub fn train_batch(
    net: &mut ValueNet,
    batch: &[(FeatureVector, f64)],
    learning_rate: f64,
) -> Result<f64> {
    Sgd::new(learning_rate, 0.0).step(net, batch)
}
