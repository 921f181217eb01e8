//! Top-κ rollout search: branch on the κ best-valued feasible pairs, finish
//! each branch with the softmax policy, keep the cheapest completion.
//!
//! Branch `b`, repetition `r` at outer iteration `i` always draws from the
//! stream keyed `(seed, i, b, r)`, so the branches examined at κ are a prefix
//! of those examined at κ + 1.

use crate::episode::{EpisodeState, Pair};
use crate::network::ValueNet;
use crate::policy;
use crate::rng::{self, Stream};

pub const DEFAULT_MAX_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutConfig {
    pub kappa: usize,
    pub rollouts_per_branch: usize,
    pub temperature: f64,
    pub seed: u64,
    /// Longest continuation handed back for commitment.
    pub max_len: usize,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            kappa: 5,
            rollouts_per_branch: 1,
            temperature: 1.0,
            seed: 0,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchResult {
    pub first: Pair,
    /// Distance of the completed rollout, return legs included.
    pub distance: f64,
    /// Customers the first pair's vehicle serves in the rollout, starting
    /// with the first pair's customer.
    pub continuation: Vec<usize>,
    pub branch: usize,
    pub rep: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelectStats {
    pub nodes_evaluated: u64,
    pub branches: usize,
    /// Distance of every completion, in (branch, rep) order.
    pub distances: Vec<f64>,
}

/// The `kappa` highest-valued feasible pairs, best first; ties keep the
/// (vehicle, customer) order.
pub fn shortlist(state: &EpisodeState<'_>, net: &ValueNet, kappa: usize) -> Vec<(Pair, f64)> {
    let pairs = state.feasible_pairs();
    let values = policy::score_pairs(state, net, &pairs);
    let mut scored: Vec<(Pair, f64)> = pairs.into_iter().zip(values).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(kappa);
    scored
}

/// Applies `first` to a private copy of the state and completes the episode
/// with softmax draws. Returns the result and the number of pairs scored.
pub fn rollout_branch(
    state: &EpisodeState<'_>,
    net: &ValueNet,
    first: Pair,
    cfg: &RolloutConfig,
    rng: &mut Stream,
) -> (BranchResult, u64) {
    let mut sim = state.clone();
    sim.set_record_features(false);
    let start = sim.vehicle(first.vehicle).route.len();
    sim.apply_decision(first)
        .expect("shortlisted pair is feasible");
    let mut scored = 0u64;
    while !sim.is_done() {
        let pairs = sim.feasible_pairs();
        assert!(
            !pairs.is_empty(),
            "idle depot vehicle can reach no customer"
        );
        let values = policy::score_pairs(&sim, net, &pairs);
        scored += pairs.len() as u64;
        let k = policy::softmax_sample(&values, cfg.temperature, rng);
        sim.apply_decision(pairs[k])
            .expect("sampled pair is feasible");
    }
    sim.finish_all();
    let continuation = sim.vehicle(first.vehicle).route[start..]
        .iter()
        .take(cfg.max_len.max(1))
        .map(|s| s.customer)
        .collect();
    let result = BranchResult {
        first,
        distance: sim.total_distance(),
        continuation,
        branch: 0,
        rep: 0,
    };
    (result, scored)
}

/// Cheapest completion over all shortlisted branches and repetitions. Ties
/// go to the earlier branch, then the earlier repetition.
pub fn select(
    state: &EpisodeState<'_>,
    net: &ValueNet,
    cfg: &RolloutConfig,
    outer: u64,
) -> (BranchResult, SelectStats) {
    let short = shortlist(state, net, cfg.kappa.max(1));
    assert!(!short.is_empty(), "select called with no feasible pair");
    let mut stats = SelectStats {
        nodes_evaluated: state.feasible_pairs().len() as u64,
        branches: short.len(),
        distances: Vec::new(),
    };
    let mut best: Option<BranchResult> = None;
    for (b, (pair, _)) in short.iter().enumerate() {
        for rep in 0..cfg.rollouts_per_branch.max(1) {
            let mut rng = rng::stream(cfg.seed, &[outer, b as u64, rep as u64]);
            let (mut res, scored) = rollout_branch(state, net, *pair, cfg, &mut rng);
            res.branch = b;
            res.rep = rep;
            stats.nodes_evaluated += scored;
            stats.distances.push(res.distance);
            if best.as_ref().is_none_or(|w| res.distance < w.distance) {
                best = Some(res);
            }
        }
    }
    (best.expect("at least one branch"), stats)
}
