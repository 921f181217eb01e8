//! The episode engine: world state, feasible vehicle-customer pairs, decision
//! application with spawn-on-departure, per-vehicle trajectories and rewards.

use rand::Rng;

use crate::error::{Result, SolverError};
use crate::features::{self, FeatureVector};
use crate::instance::DEPOT;
use crate::network::ValueNet;
use crate::policy;
use crate::problem::{Normalizers, Problem};
use crate::rng;
use crate::rollout::{self, RolloutConfig};
use crate::solution::{Solution, Stop, TIME_EPS};
use crate::subtour::{self, ForwardConfig, TightenConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    pub vehicle: usize,
    pub customer: usize,
}

impl Pair {
    pub fn new(vehicle: usize, customer: usize) -> Self {
        Self { vehicle, customer }
    }
}

/// One served customer as seen by the reward: leg length and the time from
/// the previous service completion to this service start.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    pub features: Option<FeatureVector>,
    pub distance: f64,
    pub time: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub legs: Vec<Leg>,
    /// Distance of the final leg back to the depot, known once the vehicle
    /// is finished.
    pub d_return: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: usize,
    pub location: usize,
    /// Completion time of service at `location`.
    pub clock: f64,
    pub load_used: f64,
    pub route: Vec<Stop>,
    pub done: bool,
    pub trajectory: Trajectory,
}

impl VehicleState {
    fn idle(id: usize) -> Self {
        Self {
            id,
            location: DEPOT,
            clock: 0.0,
            load_used: 0.0,
            route: Vec::new(),
            done: false,
            trajectory: Trajectory::default(),
        }
    }

    pub fn at_depot(&self) -> bool {
        self.route.is_empty()
    }

    pub fn customers(&self) -> impl Iterator<Item = usize> + '_ {
        self.route.iter().map(|s| s.customer)
    }
}

/// What `apply_decision` did.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub pair: Pair,
    pub service_start: f64,
    pub distance: f64,
    pub time: f64,
    pub spawned: Option<usize>,
}

/// Mutable world during an episode. Cloning is the snapshot mechanism used
/// by rollouts.
#[derive(Debug, Clone)]
pub struct EpisodeState<'a> {
    problem: &'a Problem,
    unserved: Vec<bool>,
    unserved_count: usize,
    vehicles: Vec<VehicleState>,
    idle: usize,
    decision_count: usize,
    record_features: bool,
}

impl<'a> EpisodeState<'a> {
    /// A fresh episode with a single idle vehicle at the depot. When
    /// `record_features` is set every decision stores its feature vector in
    /// the vehicle's trajectory.
    pub fn new(problem: &'a Problem, record_features: bool) -> Self {
        let n = problem.instance.num_customers();
        let mut unserved = vec![true; n + 1];
        unserved[DEPOT] = false;
        Self {
            problem,
            unserved,
            unserved_count: n,
            vehicles: vec![VehicleState::idle(0)],
            idle: 0,
            decision_count: 0,
            record_features,
        }
    }

    pub fn problem(&self) -> &'a Problem {
        self.problem
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn vehicle(&self, id: usize) -> &VehicleState {
        &self.vehicles[id]
    }

    pub fn idle_vehicle(&self) -> usize {
        self.idle
    }

    pub fn is_unserved(&self, customer: usize) -> bool {
        self.unserved[customer]
    }

    pub fn unserved_count(&self) -> usize {
        self.unserved_count
    }

    pub fn unserved(&self) -> impl Iterator<Item = usize> + '_ {
        self.unserved
            .iter()
            .enumerate()
            .filter(|(_, &u)| u)
            .map(|(c, _)| c)
    }

    pub fn decision_count(&self) -> usize {
        self.decision_count
    }

    pub fn is_done(&self) -> bool {
        self.unserved_count == 0
    }

    pub fn set_record_features(&mut self, on: bool) {
        self.record_features = on;
    }

    /// Earliest service start if `vehicle` went to `customer` next, or `None`
    /// when capacity or the window rules it out.
    pub fn service_start_if(&self, vehicle: usize, customer: usize) -> Option<f64> {
        let v = &self.vehicles[vehicle];
        if v.done || !self.unserved[customer] {
            return None;
        }
        let inst = &self.problem.instance;
        let c = inst.customer(customer);
        if v.load_used + c.demand > inst.vehicle_capacity + 1e-9 {
            return None;
        }
        let start = (v.clock + self.problem.travel_time(v.location, customer)).max(c.tw_open);
        (start <= c.tw_close + TIME_EPS).then_some(start)
    }

    pub fn is_feasible(&self, pair: Pair) -> bool {
        pair.vehicle < self.vehicles.len()
            && self.service_start_if(pair.vehicle, pair.customer).is_some()
    }

    /// All feasible pairs in (vehicle, customer) order.
    pub fn feasible_pairs(&self) -> Vec<Pair> {
        let mut out = Vec::new();
        for v in self.vehicles.iter().filter(|v| !v.done) {
            for c in self.unserved() {
                if self.service_start_if(v.id, c).is_some() {
                    out.push(Pair::new(v.id, c));
                }
            }
        }
        out
    }

    /// Moves the vehicle to the customer and serves it. A vehicle leaving the
    /// depot causes a fresh idle vehicle to spawn there. Vehicles left with
    /// no feasible customer are finished.
    pub fn apply_decision(&mut self, pair: Pair) -> Result<Transition> {
        let Pair { vehicle, customer } = pair;
        let service_start = match (vehicle < self.vehicles.len())
            .then(|| self.service_start_if(vehicle, customer))
            .flatten()
        {
            Some(t) => t,
            None => return Err(SolverError::InfeasiblePair { vehicle, customer }),
        };
        let features = self
            .record_features
            .then(|| features::extract(self, vehicle, customer));

        let problem = self.problem;
        let cust = problem.instance.customer(customer);
        let v = &mut self.vehicles[vehicle];
        let distance = problem.dist.get(v.location, customer);
        let time = service_start - v.clock;
        let was_idle = v.at_depot();
        v.location = customer;
        v.clock = service_start + cust.service_time;
        v.load_used += cust.demand;
        v.route.push(Stop {
            customer,
            service_start,
        });
        v.trajectory.legs.push(Leg {
            features,
            distance,
            time,
        });
        self.unserved[customer] = false;
        self.unserved_count -= 1;
        self.decision_count += 1;

        let spawned = if was_idle {
            let id = self.vehicles.len();
            self.vehicles.push(VehicleState::idle(id));
            self.idle = id;
            Some(id)
        } else {
            None
        };

        self.retire_stuck();
        Ok(Transition {
            pair,
            service_start,
            distance,
            time,
            spawned,
        })
    }

    fn retire_stuck(&mut self) {
        for k in 0..self.vehicles.len() {
            let v = &self.vehicles[k];
            if v.done || v.at_depot() {
                continue;
            }
            let stuck = self
                .unserved()
                .all(|c| self.service_start_if(k, c).is_none());
            if stuck {
                self.finish_vehicle(k);
            }
        }
    }

    /// Sends a vehicle home, recording its return leg. Returns the return
    /// distance, or `None` if the vehicle never left the depot or was already
    /// finished.
    pub fn finish_vehicle(&mut self, vehicle: usize) -> Option<f64> {
        let dist = &self.problem.dist;
        let v = &mut self.vehicles[vehicle];
        if v.done || v.at_depot() {
            return None;
        }
        let d_return = dist.get(v.location, DEPOT);
        v.trajectory.d_return = Some(d_return);
        v.done = true;
        Some(d_return)
    }

    /// Finishes every vehicle still on the road.
    pub fn finish_all(&mut self) {
        for k in 0..self.vehicles.len() {
            self.finish_vehicle(k);
        }
    }

    /// Distance travelled so far, counting a return leg for every vehicle
    /// that has left the depot.
    pub fn total_distance(&self) -> f64 {
        let dist = &self.problem.dist;
        self.vehicles
            .iter()
            .filter(|v| !v.at_depot())
            .map(|v| {
                let legs: f64 = v.trajectory.legs.iter().map(|l| l.distance).sum();
                legs + dist.get(v.location, DEPOT)
            })
            .sum()
    }

    pub fn vehicles_used(&self) -> usize {
        self.vehicles.iter().filter(|v| !v.at_depot()).count()
    }

    pub fn to_solution(&self) -> Solution {
        let mut sol = Solution {
            instance: self.problem.instance.name.clone(),
            total_distance: 0.0,
            routes: self
                .vehicles
                .iter()
                .filter(|v| !v.at_depot())
                .map(|v| crate::solution::Route {
                    vehicle: v.id,
                    stops: v.route.clone(),
                })
                .collect(),
        };
        sol.total_distance = crate::solution::solution_distance(&self.problem.dist, &sol);
        sol
    }

    /// Trajectories of vehicles that served at least one customer.
    pub fn trajectories(&self) -> Vec<Trajectory> {
        self.vehicles
            .iter()
            .filter(|v| !v.at_depot())
            .map(|v| v.trajectory.clone())
            .collect()
    }
}

/// Per-decision rewards of one vehicle:
/// `R_p = (ρ − d_p)/d_max + (τ − t_p)/t_max + γ^(P−p)·R_term` with
/// `R_term = 2ρ − (Σ d_p + D_return)/(P + 1)`.
///
/// `rho` and `tau` are the raw summary values; the denominators come from
/// `norms`. Returns an empty list for an empty or unfinished trajectory.
pub fn compute_rewards(
    traj: &Trajectory,
    rho: f64,
    tau: f64,
    norms: &Normalizers,
    gamma: f64,
) -> Vec<f64> {
    let Some(d_return) = traj.d_return else {
        return Vec::new();
    };
    let p_total = traj.legs.len();
    if p_total == 0 {
        return Vec::new();
    }
    let leg_sum: f64 = traj.legs.iter().map(|l| l.distance).sum();
    let r_term = 2.0 * rho - (leg_sum + d_return) / (p_total as f64 + 1.0);
    traj.legs
        .iter()
        .enumerate()
        .map(|(k, leg)| {
            let p = k + 1;
            (rho - leg.distance) / norms.d_max
                + (tau - leg.time) / norms.t_max
                + gamma.powi((p_total - p) as i32) * r_term
        })
        .collect()
}

/// Full solving-mode configuration: rollouts plus optional in-episode and
/// post-episode sub-tour optimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub rollout: RolloutConfig,
    pub forward: Option<ForwardConfig>,
    pub tighten: Option<TightenConfig>,
}

impl SolveConfig {
    /// Rollouts only, no sub-tour optimisation.
    pub fn rollout_only(rollout: RolloutConfig) -> Self {
        Self {
            rollout,
            forward: None,
            tighten: None,
        }
    }

    pub fn with_optimizer(rollout: RolloutConfig) -> Self {
        Self {
            rollout,
            forward: Some(ForwardConfig::default()),
            tighten: Some(TightenConfig::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    /// ε-greedy: uniform random pair with probability ε, otherwise a
    /// softmax draw over values.
    Explore { epsilon: f64, temperature: f64 },
    /// Highest-valued pair every step.
    Greedy,
    /// Softmax draw every step.
    Softmax { temperature: f64 },
    /// Rollout-guided search with optional sub-tour optimisation.
    Solve(SolveConfig),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeStats {
    pub decisions: usize,
    /// Network evaluations (one per scored pair), rollouts included.
    pub nodes_evaluated: u64,
    pub outer_iterations: usize,
    pub subtour_calls: usize,
    pub subtour_nodes: u64,
    /// Distance before post-episode tightening.
    pub untightened_distance: f64,
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub solution: Solution,
    pub trajectories: Vec<Trajectory>,
    pub stats: EpisodeStats,
}

/// Runs one episode to completion and returns a feasible solution.
///
/// The single-step modes pick one pair per iteration. `Mode::Solve` runs the
/// outer rollout loop: shortlist, roll out, commit the winner's (optionally
/// optimised) sub-tour for the chosen vehicle, and finally tighten each route.
pub fn run_episode(
    problem: &Problem,
    net: &ValueNet,
    mode: &Mode,
    seed: u64,
) -> Result<EpisodeOutcome> {
    let mut state = EpisodeState::new(problem, !matches!(mode, Mode::Solve(_)));
    let mut rng = rng::stream(seed, &[0]);
    let mut stats = EpisodeStats::default();

    match mode {
        Mode::Solve(cfg) => solve_loop(&mut state, net, cfg, &mut stats)?,
        _ => {
            while !state.is_done() {
                let pairs = state.feasible_pairs();
                if pairs.is_empty() {
                    return Err(SolverError::Stranded {
                        remaining: state.unserved_count(),
                    });
                }
                let pick = match mode {
                    Mode::Explore {
                        epsilon,
                        temperature,
                    } => {
                        if rng.gen::<f64>() < *epsilon {
                            rng.gen_range(0..pairs.len())
                        } else {
                            let values = policy::score_pairs(&state, net, &pairs);
                            stats.nodes_evaluated += pairs.len() as u64;
                            policy::softmax_sample(&values, *temperature, &mut rng)
                        }
                    }
                    Mode::Greedy => {
                        let values = policy::score_pairs(&state, net, &pairs);
                        stats.nodes_evaluated += pairs.len() as u64;
                        policy::argmax(&values)
                    }
                    Mode::Softmax { temperature } => {
                        let values = policy::score_pairs(&state, net, &pairs);
                        stats.nodes_evaluated += pairs.len() as u64;
                        policy::softmax_sample(&values, *temperature, &mut rng)
                    }
                    Mode::Solve(_) => unreachable!(),
                };
                let t = state.apply_decision(pairs[pick])?;
                log::trace!(
                    "decision {}: vehicle {} -> customer {}",
                    state.decision_count(),
                    t.pair.vehicle,
                    t.pair.customer
                );
            }
        }
    }

    state.finish_all();
    stats.decisions = state.decision_count();
    let trajectories = state.trajectories();
    let mut solution = state.to_solution();
    stats.untightened_distance = solution.total_distance;

    if let Mode::Solve(SolveConfig {
        tighten: Some(tcfg),
        ..
    }) = mode
    {
        let (tightened, calls, nodes) = subtour::tighten_solution(problem, &solution, tcfg);
        solution = tightened;
        stats.subtour_calls += calls;
        stats.subtour_nodes += nodes;
    }

    Ok(EpisodeOutcome {
        solution,
        trajectories,
        stats,
    })
}

fn solve_loop(
    state: &mut EpisodeState<'_>,
    net: &ValueNet,
    cfg: &SolveConfig,
    stats: &mut EpisodeStats,
) -> Result<()> {
    let problem = state.problem();
    while !state.is_done() {
        if state.feasible_pairs().is_empty() {
            return Err(SolverError::Stranded {
                remaining: state.unserved_count(),
            });
        }
        let outer = stats.outer_iterations as u64;
        let (winner, sel) = rollout::select(state, net, &cfg.rollout, outer);
        stats.nodes_evaluated += sel.nodes_evaluated;
        stats.outer_iterations += 1;
        let vehicle = winner.first.vehicle;

        let sequence = match &cfg.forward {
            Some(fcfg) => {
                let problem_def =
                    subtour::forward_problem(state, vehicle, &winner.continuation, fcfg);
                let sol = subtour::optimize(&problem.instance, &problem.dist, &problem_def);
                stats.subtour_calls += 1;
                stats.subtour_nodes += sol.nodes;
                log::debug!(
                    "forward: |R|={} |A|={} shift={} nodes={} time={:?} optimal={}",
                    problem_def.committed.len(),
                    problem_def.optional.len(),
                    sol.shift_used,
                    sol.nodes,
                    sol.elapsed,
                    sol.proven_optimal
                );
                sol.order
            }
            None => winner.continuation.clone(),
        };
        for c in sequence {
            state.apply_decision(Pair::new(vehicle, c))?;
        }
    }
    Ok(())
}
