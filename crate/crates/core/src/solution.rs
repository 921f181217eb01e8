//! Vehicle routes, their schedules, and the feasibility check against the
//! window, capacity and travel-time constraints.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::instance::{DistanceMatrix, Instance, DEPOT};

/// Slack allowed when comparing times computed along different paths.
pub const TIME_EPS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub customer: usize,
    pub service_start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub vehicle: usize,
    pub stops: Vec<Stop>,
}

impl Route {
    pub fn customers(&self) -> Vec<usize> {
        self.stops.iter().map(|s| s.customer).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub instance: String,
    pub total_distance: f64,
    pub routes: Vec<Route>,
}

impl Solution {
    /// Builds a solution from customer sequences, scheduling every stop at its
    /// earliest legal service start. Returns `None` if a sequence cannot meet
    /// a window.
    pub fn from_sequences(
        inst: &Instance,
        dist: &DistanceMatrix,
        sequences: impl IntoIterator<Item = (usize, Vec<usize>)>,
    ) -> Option<Solution> {
        let mut routes = Vec::new();
        for (vehicle, seq) in sequences {
            if seq.is_empty() {
                continue;
            }
            let starts = earliest_starts(inst, dist, DEPOT, 0.0, &seq)?;
            routes.push(Route {
                vehicle,
                stops: seq
                    .iter()
                    .zip(starts)
                    .map(|(&customer, service_start)| Stop {
                        customer,
                        service_start,
                    })
                    .collect(),
            });
        }
        let mut sol = Solution {
            instance: inst.name.clone(),
            total_distance: 0.0,
            routes,
        };
        sol.total_distance = solution_distance(dist, &sol);
        Some(sol)
    }

    pub fn vehicles_used(&self) -> usize {
        self.routes.iter().filter(|r| !r.stops.is_empty()).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Solution> {
        serde_json::from_str(text)
    }

    /// One stop per line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("vehicle,position,customer,service_start\n");
        for r in &self.routes {
            for (k, stop) in r.stops.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    r.vehicle,
                    k + 1,
                    stop.customer,
                    stop.service_start
                );
            }
        }
        s
    }
}

/// Earliest service starts along `seq` when leaving `start` at `clock`
/// (the completion time of service there). Waiting for a window to open is
/// allowed. `None` if some window closes before the vehicle can start.
pub fn earliest_starts(
    inst: &Instance,
    dist: &DistanceMatrix,
    start: usize,
    clock: f64,
    seq: &[usize],
) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(seq.len());
    let mut at = start;
    let mut now = clock;
    for &c in seq {
        let cust = inst.customer(c);
        let arrival = now + dist.get(at, c) / inst.speed;
        let begin = arrival.max(cust.tw_open);
        if begin > cust.tw_close + TIME_EPS {
            return None;
        }
        out.push(begin);
        now = begin + cust.service_time;
        at = c;
    }
    Some(out)
}

/// Length of a closed depot tour through `seq`.
pub fn tour_length(dist: &DistanceMatrix, seq: &[usize]) -> f64 {
    if seq.is_empty() {
        return 0.0;
    }
    let mut total = dist.get(DEPOT, seq[0]);
    for w in seq.windows(2) {
        total += dist.get(w[0], w[1]);
    }
    total + dist.get(seq[seq.len() - 1], DEPOT)
}

/// Total distance: depot to first stop, consecutive legs, last stop back to
/// the depot, summed over routes. Empty routes contribute nothing.
pub fn solution_distance(dist: &DistanceMatrix, sol: &Solution) -> f64 {
    sol.routes
        .iter()
        .map(|r| tour_length(dist, &r.customers()))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Window {
        vehicle: usize,
        customer: usize,
        service_start: f64,
        open: f64,
        close: f64,
    },
    Capacity {
        vehicle: usize,
        load: f64,
        capacity: f64,
    },
    TravelTime {
        vehicle: usize,
        customer: usize,
        service_start: f64,
        earliest: f64,
    },
    UnknownCustomer {
        vehicle: usize,
        customer: usize,
    },
    Missing {
        customer: usize,
    },
    Duplicate {
        customer: usize,
        count: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Window {
                vehicle,
                customer,
                service_start,
                open,
                close,
            } => write!(
                f,
                "vehicle {vehicle}: customer {customer} served at {service_start} outside [{open}, {close}]"
            ),
            Violation::Capacity {
                vehicle,
                load,
                capacity,
            } => write!(f, "vehicle {vehicle}: load {load} exceeds capacity {capacity}"),
            Violation::TravelTime {
                vehicle,
                customer,
                service_start,
                earliest,
            } => write!(
                f,
                "vehicle {vehicle}: customer {customer} served at {service_start}, earliest possible {earliest}"
            ),
            Violation::UnknownCustomer { vehicle, customer } => {
                write!(f, "vehicle {vehicle}: unknown customer {customer}")
            }
            Violation::Missing { customer } => write!(f, "customer {customer} is not served"),
            Violation::Duplicate { customer, count } => {
                write!(f, "customer {customer} is served {count} times")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "OK");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks service windows, vehicle capacity, travel-time precedence and
/// coverage. Violations are returned as data.
pub fn check_feasible(inst: &Instance, dist: &DistanceMatrix, sol: &Solution) -> FeasibilityReport {
    let mut violations = Vec::new();
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    let n = inst.num_customers();

    for route in &sol.routes {
        let v = route.vehicle;
        let mut load = 0.0;
        let mut prev: Option<(usize, f64)> = None;
        for stop in &route.stops {
            let c = stop.customer;
            if c == DEPOT || c > n {
                violations.push(Violation::UnknownCustomer {
                    vehicle: v,
                    customer: c,
                });
                prev = None;
                continue;
            }
            *seen.entry(c).or_default() += 1;
            let cust = inst.customer(c);
            let t = stop.service_start;
            load += cust.demand;

            if !(t >= cust.tw_open - TIME_EPS && t <= cust.tw_close + TIME_EPS) {
                violations.push(Violation::Window {
                    vehicle: v,
                    customer: c,
                    service_start: t,
                    open: cust.tw_open,
                    close: cust.tw_close,
                });
            }
            let earliest = match prev {
                None => dist.get(DEPOT, c) / inst.speed,
                Some((p, tp)) => tp + inst.service_time(p) + dist.get(p, c) / inst.speed,
            };
            if !(t >= earliest - TIME_EPS) {
                violations.push(Violation::TravelTime {
                    vehicle: v,
                    customer: c,
                    service_start: t,
                    earliest,
                });
            }
            prev = Some((c, t));
        }
        if load > inst.vehicle_capacity + 1e-9 {
            violations.push(Violation::Capacity {
                vehicle: v,
                load,
                capacity: inst.vehicle_capacity,
            });
        }
    }

    for c in 1..=n {
        match seen.get(&c).copied().unwrap_or(0) {
            0 => violations.push(Violation::Missing { customer: c }),
            1 => {}
            count => violations.push(Violation::Duplicate { customer: c, count }),
        }
    }

    FeasibilityReport { violations }
}
