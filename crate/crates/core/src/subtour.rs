//! Exact sequencing of one vehicle's pending sub-tour.
//!
//! Committed customers `R` must all be served and may move at most `Δ`
//! positions away from their rollout position. Optional customers `A` may be
//! inserted anywhere or skipped at a penalty of `d_max` each. The objective is
//! leg distance plus skip penalties plus the return leg to the depot.
//!
//! The search is a depth-first branch and bound over the next position, with
//! a per-node lower bound (cheapest incoming edge of every unplaced customer
//! plus a return-leg bound) and a dominance memo keyed on the placed set and
//! the last customer. When a search runs out of time, `Δ` is lowered and the
//! search restarts; the best sequence seen across attempts is kept.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::episode::EpisodeState;
use crate::instance::{DistanceMatrix, Instance, DEPOT};
use crate::problem::Problem;
use crate::solution::{self, Route, Solution, Stop, TIME_EPS};

pub const MAX_NODES: usize = 127;

#[derive(Debug, Clone, PartialEq)]
pub struct SubtourProblem {
    pub start: usize,
    /// Service completion time at `start`.
    pub start_clock: f64,
    pub start_load: f64,
    /// Rollout order; customer `committed[k]` has rollout position `k + 1`.
    pub committed: Vec<usize>,
    pub optional: Vec<usize>,
    pub max_shift: usize,
    pub skip_penalty: f64,
    pub time_budget: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubtourSolution {
    pub order: Vec<usize>,
    pub service_starts: Vec<f64>,
    pub skipped: Vec<usize>,
    /// Travel plus skip penalties.
    pub objective: f64,
    pub travel_cost: f64,
    pub proven_optimal: bool,
    pub shift_used: usize,
    pub nodes: u64,
    pub elapsed: Duration,
}

impl SubtourSolution {
    /// 1-based position of `customer`, or `None` if it was skipped.
    pub fn position(&self, customer: usize) -> Option<usize> {
        self.order
            .iter()
            .position(|&c| c == customer)
            .map(|p| p + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardConfig {
    pub max_shift: usize,
    pub time_budget: Duration,
    /// Cap on the optional set, nearest to `R` first.
    pub max_optional: usize,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            max_shift: 2,
            time_budget: Duration::from_millis(1000),
            max_optional: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightenConfig {
    pub max_shift: usize,
    pub time_budget: Duration,
}

impl Default for TightenConfig {
    fn default() -> Self {
        Self {
            max_shift: 3,
            time_budget: Duration::from_millis(1000),
        }
    }
}

/// Cost and schedule of serving `order` from the problem's start, or `None`
/// if a window or the capacity is violated. Returns (travel, starts).
pub fn evaluate_order(
    inst: &Instance,
    dist: &DistanceMatrix,
    p: &SubtourProblem,
    order: &[usize],
) -> Option<(f64, Vec<f64>)> {
    let mut at = p.start;
    let mut clock = p.start_clock;
    let mut load = p.start_load;
    let mut travel = 0.0;
    let mut starts = Vec::with_capacity(order.len());
    for &c in order {
        let cust = inst.customer(c);
        load += cust.demand;
        if load > inst.vehicle_capacity + 1e-9 {
            return None;
        }
        let s = (clock + dist.get(at, c) / inst.speed).max(cust.tw_open);
        if s > cust.tw_close + TIME_EPS {
            return None;
        }
        travel += dist.get(at, c);
        starts.push(s);
        clock = s + cust.service_time;
        at = c;
    }
    Some((travel + dist.get(at, DEPOT), starts))
}

/// Minimises the sub-tour objective, lowering `Δ` after each timed-out
/// attempt. Always returns a feasible sequence when the rollout order of `R`
/// is feasible.
pub fn optimize(inst: &Instance, dist: &DistanceMatrix, p: &SubtourProblem) -> SubtourSolution {
    let began = Instant::now();
    let n_total = p.committed.len() + p.optional.len();
    assert!(
        n_total <= MAX_NODES,
        "sub-tour of {n_total} customers is too large"
    );

    let mut search = Search::new(inst, dist, p);
    let base: Vec<usize> = (0..p.committed.len()).collect();
    if let Some(cost) = search.cost_of(&base) {
        search.best_cost = cost;
        search.best = base;
    } else {
        debug_assert!(false, "rollout order is infeasible");
        log::warn!(
            "rollout order of {:?} is infeasible from {}",
            p.committed,
            p.start
        );
    }

    let mut shift = p.max_shift;
    let mut proven = false;
    loop {
        search.run(shift, p.time_budget);
        if !search.timed_out {
            proven = true;
            break;
        }
        log::debug!("sub-tour search timed out at shift {shift}");
        if shift == 0 {
            search.greedy_append();
            break;
        }
        shift -= 1;
    }

    let local = search.best.clone();
    let order: Vec<usize> = local.iter().map(|&j| search.ids[j]).collect();
    let (travel_cost, service_starts) = match evaluate_order(inst, dist, p, &order) {
        Some(x) => x,
        None => (f64::INFINITY, Vec::new()),
    };
    let skipped: Vec<usize> = p
        .optional
        .iter()
        .copied()
        .filter(|c| !order.contains(c))
        .collect();
    let objective = travel_cost + p.skip_penalty * skipped.len() as f64;
    SubtourSolution {
        order,
        service_starts,
        skipped,
        objective,
        travel_cost,
        proven_optimal: proven,
        shift_used: shift,
        nodes: search.nodes,
        elapsed: began.elapsed(),
    }
}

/// Re-sequences one complete route from the depot.
pub fn tighten(
    inst: &Instance,
    dist: &DistanceMatrix,
    route: &[usize],
    max_shift: usize,
    budget: Duration,
    skip_penalty: f64,
) -> SubtourSolution {
    let p = SubtourProblem {
        start: DEPOT,
        start_clock: 0.0,
        start_load: 0.0,
        committed: route.to_vec(),
        optional: Vec::new(),
        max_shift,
        skip_penalty,
        time_budget: budget,
    };
    optimize(inst, dist, &p)
}

/// Forward problem for `vehicle` about to commit `continuation`: the optional
/// set is the unserved cluster-mates of the continuation, nearest first.
pub fn forward_problem(
    state: &EpisodeState<'_>,
    vehicle: usize,
    continuation: &[usize],
    cfg: &ForwardConfig,
) -> SubtourProblem {
    let problem = state.problem();
    let s = &problem.summary;
    let v = state.vehicle(vehicle);
    let mut optional: Vec<(f64, usize)> = Vec::new();
    for &r in continuation {
        for &j in s.cluster_members(r) {
            if state.is_unserved(j)
                && !continuation.contains(&j)
                && !optional.iter().any(|&(_, o)| o == j)
            {
                let near = continuation
                    .iter()
                    .map(|&c| problem.dist.get(c, j))
                    .fold(f64::INFINITY, f64::min);
                optional.push((near, j));
            }
        }
    }
    optional.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    optional.truncate(cfg.max_optional);
    SubtourProblem {
        start: v.location,
        start_clock: v.clock,
        start_load: v.load_used,
        committed: continuation.to_vec(),
        optional: optional.into_iter().map(|(_, j)| j).collect(),
        max_shift: cfg.max_shift,
        skip_penalty: problem.summary.d_max,
        time_budget: cfg.time_budget,
    }
}

/// Tightens every route of a finished solution. Routes are only replaced by
/// strictly shorter sequences. Returns the solution, the number of optimizer
/// calls and the nodes expanded.
pub fn tighten_solution(
    problem: &Problem,
    sol: &Solution,
    cfg: &TightenConfig,
) -> (Solution, usize, u64) {
    let inst = &problem.instance;
    let dist = &problem.dist;
    let mut calls = 0;
    let mut nodes = 0;
    let mut routes = Vec::with_capacity(sol.routes.len());
    for r in &sol.routes {
        let seq = r.customers();
        if seq.len() < 2 {
            routes.push(r.clone());
            continue;
        }
        let before = solution::tour_length(dist, &seq);
        let t = tighten(
            inst,
            dist,
            &seq,
            cfg.max_shift,
            cfg.time_budget,
            problem.summary.d_max,
        );
        calls += 1;
        nodes += t.nodes;
        log::debug!(
            "tighten vehicle {}: |R|={} shift={} nodes={} time={:?} optimal={} {:.3} -> {:.3}",
            r.vehicle,
            seq.len(),
            t.shift_used,
            t.nodes,
            t.elapsed,
            t.proven_optimal,
            before,
            t.travel_cost
        );
        if t.travel_cost < before - 1e-9 {
            routes.push(Route {
                vehicle: r.vehicle,
                stops: t
                    .order
                    .iter()
                    .zip(&t.service_starts)
                    .map(|(&customer, &service_start)| Stop {
                        customer,
                        service_start,
                    })
                    .collect(),
            });
        } else {
            routes.push(r.clone());
        }
    }
    let mut out = Solution {
        instance: sol.instance.clone(),
        total_distance: 0.0,
        routes,
    };
    out.total_distance = solution::solution_distance(dist, &out);
    (out, calls, nodes)
}

/// Local indices: `0..n_r` are `R` in rollout order, `n_r..m` are `A`, and
/// `m` stands for the start location.
struct Search {
    ids: Vec<usize>,
    n_r: usize,
    m: usize,
    demand: Vec<f64>,
    open: Vec<f64>,
    close: Vec<f64>,
    service: Vec<f64>,
    /// `(m + 1) × m`, travel distance from local `a` (or the start) to `b`.
    leg: Vec<f64>,
    home: Vec<f64>,
    min_in: Vec<f64>,
    speed: f64,
    capacity: f64,
    penalty: f64,
    start_clock: f64,
    start_load: f64,

    shift: usize,
    deadline: Instant,
    timed_out: bool,
    nodes: u64,
    memo: HashMap<(u128, usize), Vec<(f64, f64)>>,
    seq: Vec<usize>,
    best: Vec<usize>,
    best_cost: f64,
}

impl Search {
    fn new(inst: &Instance, dist: &DistanceMatrix, p: &SubtourProblem) -> Self {
        let ids: Vec<usize> = p.committed.iter().chain(&p.optional).copied().collect();
        let m = ids.len();
        let node = |k: usize| if k == m { p.start } else { ids[k] };
        let mut leg = vec![0.0; (m + 1) * m];
        for a in 0..=m {
            for b in 0..m {
                leg[a * m + b] = dist.get(node(a), ids[b]);
            }
        }
        let home = (0..=m).map(|a| dist.get(node(a), DEPOT)).collect();
        let min_in = (0..m)
            .map(|b| {
                (0..=m)
                    .filter(|&a| a != b)
                    .map(|a| leg[a * m + b])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let field = |f: &dyn Fn(usize) -> f64| ids.iter().map(|&c| f(c)).collect::<Vec<f64>>();
        Self {
            n_r: p.committed.len(),
            m,
            demand: field(&|c| inst.customer(c).demand),
            open: field(&|c| inst.customer(c).tw_open),
            close: field(&|c| inst.customer(c).tw_close),
            service: field(&|c| inst.customer(c).service_time),
            ids,
            leg,
            home,
            min_in,
            speed: inst.speed,
            capacity: inst.vehicle_capacity,
            penalty: p.skip_penalty,
            start_clock: p.start_clock,
            start_load: p.start_load,
            shift: p.max_shift,
            deadline: Instant::now(),
            timed_out: false,
            nodes: 0,
            memo: HashMap::new(),
            seq: Vec::new(),
            best: Vec::new(),
            best_cost: f64::INFINITY,
        }
    }

    fn leg(&self, from: usize, to: usize) -> f64 {
        self.leg[from * self.m + to]
    }

    /// Objective of a local sequence (unserved `A` members skipped), if feasible.
    fn cost_of(&self, seq: &[usize]) -> Option<f64> {
        let (mut at, mut clock, mut load, mut cost) =
            (self.m, self.start_clock, self.start_load, 0.0);
        for &j in seq {
            let (s, l) = self.step(at, clock, load, j)?;
            cost += self.leg(at, j);
            clock = s + self.service[j];
            load = l;
            at = j;
        }
        let skipped = (self.n_r..self.m).filter(|j| !seq.contains(j)).count();
        Some(cost + self.home[at] + self.penalty * skipped as f64)
    }

    /// Service start and new load after moving from `at` to `j`.
    fn step(&self, at: usize, clock: f64, load: f64, j: usize) -> Option<(f64, f64)> {
        let l = load + self.demand[j];
        if l > self.capacity + 1e-9 {
            return None;
        }
        let s = (clock + self.leg(at, j) / self.speed).max(self.open[j]);
        (s <= self.close[j] + TIME_EPS).then_some((s, l))
    }

    fn run(&mut self, shift: usize, budget: Duration) {
        self.shift = shift;
        self.deadline = Instant::now() + budget;
        self.timed_out = false;
        self.memo.clear();
        self.seq.clear();
        self.dfs(0, self.m, 0.0, self.start_clock, self.start_load);
    }

    fn dfs(&mut self, mask: u128, last: usize, cost: f64, clock: f64, load: f64) {
        self.nodes += 1;
        if self.nodes.is_multiple_of(512) && Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        if self.timed_out {
            return;
        }

        let placed = self.seq.len();
        let r_left = (0..self.n_r).any(|j| mask & (1 << j) == 0);
        if !r_left {
            let skipped = (self.n_r..self.m).filter(|&j| mask & (1 << j) == 0).count();
            let total = cost + self.home[last] + self.penalty * skipped as f64;
            if total < self.best_cost - 1e-12 {
                self.best_cost = total;
                self.best = self.seq.clone();
            }
        }

        let mut bound = cost;
        let mut ret = if r_left {
            f64::INFINITY
        } else {
            self.home[last]
        };
        for j in 0..self.m {
            if mask & (1 << j) != 0 {
                continue;
            }
            bound += if j < self.n_r {
                self.min_in[j]
            } else {
                self.min_in[j].min(self.penalty)
            };
            ret = ret.min(self.home[j]);
        }
        if bound + ret >= self.best_cost - 1e-10 {
            return;
        }

        let labels = self.memo.entry((mask, last)).or_default();
        if labels
            .iter()
            .any(|&(c, t)| c <= cost + 1e-12 && t <= clock + 1e-12)
        {
            return;
        }
        labels.retain(|&(c, t)| !(cost <= c && clock <= t));
        labels.push((cost, clock));

        let pos = placed + 1;
        let mut cands: Vec<(f64, usize)> = Vec::new();
        for j in 0..self.m {
            if mask & (1 << j) != 0 {
                continue;
            }
            if j < self.n_r && (pos + self.shift < j + 1 || j + 1 + self.shift < pos) {
                continue;
            }
            // Every other unplaced R member must still reach its window of positions.
            let late = (0..self.n_r)
                .any(|i| i != j && mask & (1 << i) == 0 && i + 1 + self.shift < pos + 1);
            if late {
                continue;
            }
            cands.push((self.leg(last, j), j));
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (d, j) in cands {
            let Some((s, l)) = self.step(last, clock, load, j) else {
                continue;
            };
            self.seq.push(j);
            self.dfs(mask | (1 << j), j, cost + d, s + self.service[j], l);
            self.seq.pop();
            if self.timed_out {
                return;
            }
        }
    }

    /// Appends optional customers after the best sequence while that lowers
    /// the objective, cheapest improvement first.
    fn greedy_append(&mut self) {
        loop {
            let mut improved: Option<(f64, usize)> = None;
            for j in self.n_r..self.m {
                if self.best.contains(&j) {
                    continue;
                }
                let mut trial = self.best.clone();
                trial.push(j);
                if let Some(c) = self.cost_of(&trial) {
                    if c < self.best_cost - 1e-12 && improved.is_none_or(|(b, _)| c < b) {
                        improved = Some((c, j));
                    }
                }
            }
            match improved {
                Some((c, j)) => {
                    self.best.push(j);
                    self.best_cost = c;
                }
                None => break,
            }
        }
    }
}
