#![allow(dead_code)]

// Random sub-tour problems whose rollout order is feasible by construction,
// and a brute-force optimum over every subset of A and every ordering.

use std::time::Duration;

use cvrptw_core::instance::{Customer, Depot};
use cvrptw_core::{DistanceMatrix, Instance, SubtourProblem};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn random_problem<R: Rng>(
    rng: &mut R,
    max_customers: usize,
) -> (Instance, DistanceMatrix, SubtourProblem) {
    let m = rng.gen_range(1..=max_customers);
    let n_r = rng.gen_range(1..=m);
    let from_depot = rng.gen_bool(0.4);
    // Node 1 is the start when it is not the depot; the sub-tour uses the rest.
    let offset = if from_depot { 0 } else { 1 };
    let n = m + offset;
    let capacity = 100.0;

    let mut customers: Vec<Customer> = (1..=n)
        .map(|id| Customer {
            id,
            x: rng.gen_range(0.0..100.0),
            y: rng.gen_range(0.0..100.0),
            demand: rng.gen_range(1.0..20.0_f64).round(),
            tw_open: 0.0,
            tw_close: 10_000.0,
            service_time: [0.0, 5.0, 10.0][rng.gen_range(0..3)],
        })
        .collect();
    let mut ids: Vec<usize> = (1 + offset..=n).collect();
    ids.shuffle(rng);
    let committed = ids[..n_r].to_vec();
    let optional = ids[n_r..].to_vec();

    let start = if from_depot { 0 } else { 1 };
    let start_clock = if from_depot {
        0.0
    } else {
        rng.gen_range(0.0..50.0)
    };
    let share = (capacity / n_r as f64).floor().max(1.0);
    for &c in &committed {
        customers[c - 1].demand = rng.gen_range(1.0..=share).round();
    }
    let r_demand: f64 = committed.iter().map(|&c| customers[c - 1].demand).sum();
    let start_load = if from_depot {
        0.0
    } else {
        (capacity - r_demand).max(0.0) * rng.gen_range(0.0..1.0)
    };
    for &a in &optional {
        customers[a - 1].demand = rng.gen_range(1.0..40.0_f64).round();
    }

    let coords = |cs: &[Customer], k: usize| {
        if k == 0 {
            (50.0, 50.0)
        } else {
            (cs[k - 1].x, cs[k - 1].y)
        }
    };
    let d = |cs: &[Customer], a: usize, b: usize| {
        let (p, q) = (coords(cs, a), coords(cs, b));
        ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
    };

    // Windows along the rollout order so it stays feasible; sometimes tight,
    // sometimes forcing a wait.
    let mut at = start;
    let mut clock = start_clock;
    for &c in &committed {
        let arrival = clock + d(&customers, at, c);
        let open = if rng.gen_bool(0.3) {
            arrival + rng.gen_range(0.0..30.0)
        } else {
            (arrival - rng.gen_range(0.0..60.0)).max(0.0)
        };
        let begin = arrival.max(open);
        let close = begin
            + if rng.gen_bool(0.3) {
                rng.gen_range(0.0..5.0)
            } else {
                rng.gen_range(0.0..80.0)
            };
        customers[c - 1].tw_open = open;
        customers[c - 1].tw_close = close;
        clock = begin + customers[c - 1].service_time;
        at = c;
    }
    for &a in &optional {
        let open = rng.gen_range(0.0..200.0);
        customers[a - 1].tw_open = open;
        customers[a - 1].tw_close = open + rng.gen_range(0.0..150.0);
    }

    let inst = Instance {
        name: "random".into(),
        depot: Depot {
            x: 50.0,
            y: 50.0,
            ready: 0.0,
            due: 100_000.0,
        },
        customers,
        vehicle_capacity: capacity,
        vehicle_count: 25,
        speed: 1.0,
    };
    let dist = DistanceMatrix::new(&inst);
    let p = SubtourProblem {
        start,
        start_clock,
        start_load,
        committed,
        optional,
        max_shift: rng.gen_range(0..=3),
        skip_penalty: rng.gen_range(20.0..150.0),
        time_budget: Duration::from_secs(30),
    };
    (inst, dist, p)
}

fn feasible_cost(
    inst: &Instance,
    dist: &DistanceMatrix,
    p: &SubtourProblem,
    seq: &[usize],
) -> Option<f64> {
    let mut at = p.start;
    let mut clock = p.start_clock;
    let mut load = p.start_load;
    let mut cost = 0.0;
    for (k, &c) in seq.iter().enumerate() {
        if let Some(r) = p.committed.iter().position(|&x| x == c) {
            if (k as i64 - r as i64).unsigned_abs() as usize > p.max_shift {
                return None;
            }
        }
        let cust = &inst.customers[c - 1];
        load += cust.demand;
        if load > inst.vehicle_capacity + 1e-9 {
            return None;
        }
        let begin = (clock + dist.get(at, c) / inst.speed).max(cust.tw_open);
        if begin > cust.tw_close + 1e-7 {
            return None;
        }
        cost += dist.get(at, c);
        clock = begin + cust.service_time;
        at = c;
    }
    Some(cost + dist.get(at, 0))
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Minimum objective over every subset of A and every ordering, or `None`
/// when nothing is feasible.
pub fn brute_force(inst: &Instance, dist: &DistanceMatrix, p: &SubtourProblem) -> Option<f64> {
    let mut best: Option<f64> = None;
    let a = p.optional.len();
    for subset in 0u32..(1 << a) {
        let mut items = p.committed.clone();
        let mut skipped = 0;
        for (k, &c) in p.optional.iter().enumerate() {
            if subset & (1 << k) != 0 {
                items.push(c);
            } else {
                skipped += 1;
            }
        }
        let penalty = p.skip_penalty * skipped as f64;
        permutations(&mut items, 0, &mut |seq| {
            if let Some(c) = feasible_cost(inst, dist, p, seq) {
                let j = c + penalty;
                if best.is_none_or(|b| j < b) {
                    best = Some(j);
                }
            }
        });
    }
    best
}

/// Objective of the rollout order with every optional customer skipped.
pub fn rollout_cost(inst: &Instance, dist: &DistanceMatrix, p: &SubtourProblem) -> Option<f64> {
    feasible_cost(inst, dist, p, &p.committed).map(|c| c + p.skip_penalty * p.optional.len() as f64)
}
