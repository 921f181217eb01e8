#![allow(dead_code, clippy::needless_range_loop)]

// Central finite-difference check of the network's analytic gradients.

use cvrptw_core::{rng, FeatureVector, ValueNet, NUM_FEATURES};
use rand::Rng;

pub fn random_input(r: &mut impl Rng) -> FeatureVector {
    let mut f = [0.0; NUM_FEATURES];
    for v in &mut f {
        *v = r.gen_range(-1.0..2.0);
    }
    FeatureVector(f)
}

/// Pre-activations of every layer for one input, by scalar loops.
fn pre_activations(net: &ValueNet, x: &FeatureVector) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut h: Vec<f64> = x.0.to_vec();
    for layer in &net.layers {
        let (fan_in, fan_out) = layer.weights.dim();
        let z: Vec<f64> = (0..fan_out)
            .map(|o| {
                layer.bias[o]
                    + (0..fan_in)
                        .map(|i| h[i] * layer.weights[[i, o]])
                        .sum::<f64>()
            })
            .collect();
        h = z.iter().map(|v| v.tanh()).collect();
        out.push(z);
    }
    out
}

/// Output when pre-activation `unit` of layer `l` is shifted by `dz`. The
/// shift reaches layer `l + 1` through one row of its weights; the layers
/// above that are recomputed in full.
fn output_with_shift(net: &ValueNet, pre: &[Vec<f64>], l: usize, unit: usize, dz: f64) -> f64 {
    let last = net.layers.len() - 1;
    if l == last {
        return pre[l][0] + dz;
    }
    let dh = (pre[l][unit] + dz).tanh() - pre[l][unit].tanh();
    let next = &net.layers[l + 1];
    let mut z: Vec<f64> = pre[l + 1]
        .iter()
        .enumerate()
        .map(|(o, v)| v + dh * next.weights[[unit, o]])
        .collect();
    for k in l + 2..net.layers.len() {
        let h: Vec<f64> = z.iter().map(|v| v.tanh()).collect();
        let layer = &net.layers[k];
        let (fan_in, fan_out) = layer.weights.dim();
        z = (0..fan_out)
            .map(|o| {
                layer.bias[o]
                    + (0..fan_in)
                        .map(|i| h[i] * layer.weights[[i, o]])
                        .sum::<f64>()
            })
            .collect();
    }
    z[0]
}

/// Largest relative error between analytic and central-difference gradients
/// (step `h`) over every parameter, for one random network and batch per
/// configuration.
pub fn worst_relative_errors(configs: u64, h: f64) -> Vec<f64> {
    let mut r = rng::stream(17, &[]);
    let mut out = Vec::new();
    for config in 0..configs {
        let net = ValueNet::init(100 + config);
        let batch: Vec<(FeatureVector, f64)> = (0..4)
            .map(|_| (random_input(&mut r), r.gen_range(-2.0..2.0)))
            .collect();
        let (_, grads) = net.loss_and_gradients(&batch).unwrap();
        let pres: Vec<Vec<Vec<f64>>> = batch
            .iter()
            .map(|(x, _)| pre_activations(&net, x))
            .collect();
        // Input of layer l for sample s.
        let input = |s: usize, l: usize| -> Vec<f64> {
            if l == 0 {
                batch[s].0 .0.to_vec()
            } else {
                pres[s][l - 1].iter().map(|v| v.tanh()).collect()
            }
        };
        let fd = |l: usize, unit: usize, scale: &dyn Fn(usize) -> f64| -> f64 {
            let loss = |sign: f64| {
                batch
                    .iter()
                    .enumerate()
                    .map(|(s, (_, y))| {
                        (output_with_shift(&net, &pres[s], l, unit, sign * h * scale(s)) - y)
                            .powi(2)
                    })
                    .sum::<f64>()
                    / batch.len() as f64
            };
            (loss(1.0) - loss(-1.0)) / (2.0 * h)
        };
        let mut worst: f64 = 0.0;
        for l in 0..net.layers.len() {
            let inputs: Vec<Vec<f64>> = (0..batch.len()).map(|s| input(s, l)).collect();
            let (rows, cols) = net.layers[l].weights.dim();
            for j in 0..cols {
                for i in 0..rows {
                    // Perturbing W[i, j] by h shifts pre-activation j by h * input[i].
                    let numeric = fd(l, j, &|s| inputs[s][i]);
                    worst = worst.max(rel_err(grads.layers[l].weights[[i, j]], numeric));
                }
                let numeric = fd(l, j, &|_| 1.0);
                worst = worst.max(rel_err(grads.layers[l].bias[j], numeric));
            }
        }
        out.push(worst);
    }
    out
}

/// Relative error with an absolute floor so that near-zero gradients compare
/// on the scale of the finite-difference noise.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}
