use rand::Rng;

use crate::episode::{EpisodeState, Pair};
use crate::features::{self, FeatureVector};
use crate::network::ValueNet;

/// Below this temperature softmax sampling degenerates to argmax.
pub const GREEDY_TEMPERATURE: f64 = 1e-9;

pub fn pair_features(state: &EpisodeState<'_>, pairs: &[Pair]) -> Vec<FeatureVector> {
    pairs
        .iter()
        .map(|p| features::extract(state, p.vehicle, p.customer))
        .collect()
}

/// Network value of each pair, in input order.
pub fn score_pairs(state: &EpisodeState<'_>, net: &ValueNet, pairs: &[Pair]) -> Vec<f64> {
    net.forward_batch(&pair_features(state, pairs))
}

/// Index of the first maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Draws an index with probability proportional to `exp(value / temperature)`.
pub fn softmax_sample<R: Rng + ?Sized>(values: &[f64], temperature: f64, rng: &mut R) -> usize {
    assert!(!values.is_empty(), "softmax over no values");
    if temperature < GREEDY_TEMPERATURE {
        return argmax(values);
    }
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = values
        .iter()
        .map(|v| ((v - top) / temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return k;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// ε after `episode` completed episodes.
pub fn epsilon(start: f64, decay: f64, episode: usize) -> f64 {
    start * decay.powi(episode as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn argmax_takes_first_of_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[5.0]), 0);
    }

    #[test]
    fn cold_softmax_is_argmax() {
        let mut r = rng::stream(0, &[]);
        for _ in 0..50 {
            assert_eq!(softmax_sample(&[0.1, 0.9, 0.3], 1e-12, &mut r), 1);
        }
    }

    #[test]
    fn softmax_frequencies() {
        let mut r = rng::stream(4, &[]);
        let values = [0.0, 2f64.ln()];
        let n = 60_000;
        let ones = (0..n)
            .filter(|_| softmax_sample(&values, 1.0, &mut r) == 1)
            .count() as f64;
        let p = 2.0 / 3.0;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((ones - n as f64 * p).abs() < 4.0 * sd, "{ones}");
    }

    #[test]
    fn epsilon_schedule() {
        assert_eq!(epsilon(1.0, 0.9995, 0), 1.0);
        assert!((epsilon(1.0, 0.9995, 2000) - 0.9995f64.powi(2000)).abs() < 1e-15);
        let mut prev = 2.0;
        for e in 0..5000 {
            let x = epsilon(1.0, 0.9995, e);
            assert!(x <= prev);
            prev = x;
        }
    }
}
