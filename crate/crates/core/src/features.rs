//! The 17 normalised inputs describing one (vehicle, customer) pair.
//!
//! Distances are divided by `d_max`, times by `t_max`; `ρ` and `τ` act as
//! thresholds. "Dropped" customers are the unserved members of the vehicle's
//! current cluster that it would leave behind by moving to another cluster.

use crate::episode::EpisodeState;
use crate::instance::DEPOT;

pub const NUM_FEATURES: usize = 17;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "d",
    "b_d_short",
    "t",
    "b_t_short",
    "ngb",
    "non_d",
    "c_left",
    "drop_far",
    "drop_cls",
    "drop_long",
    "served",
    "cls_dem",
    "hops",
    "cls_tim",
    "urgt",
    "dfrac",
    "remote",
];

/// Guard for zero-demand customers in `dfrac`.
pub const DFRAC_EPS: f64 = 1e-6;

const CLAMP_LO: f64 = -1.0;
const CLAMP_HI: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|k| self.0[k])
    }

    /// Header plus one row, for debug dumps.
    pub fn csv_header() -> String {
        FEATURE_NAMES.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.0
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn clamp(v: f64) -> f64 {
    v.clamp(CLAMP_LO, CLAMP_HI)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Feature vector for sending `vehicle` to `cust` next. The pair is expected
/// to be feasible.
pub fn extract(state: &EpisodeState<'_>, vehicle: usize, cust: usize) -> FeatureVector {
    let problem = state.problem();
    let inst = &problem.instance;
    let dist = &problem.dist;
    let s = &problem.summary;
    let norm = &problem.norms;
    let v = state.vehicle(vehicle);
    let c = inst.customer(cust);

    let loc = v.location;
    let now = v.clock;
    let d_raw = dist.get(loc, cust);
    let arrival = now + d_raw / inst.speed;
    let start = arrival.max(c.tw_open);
    let gap = start - now;
    let spare = inst.vehicle_capacity - v.load_used;

    let ngb = loc != DEPOT && s.same_cluster(loc, cust);
    let non_d = if ngb {
        s.nearest_outside[cust] / norm.d_max
    } else {
        0.0
    };

    let dropped: Vec<usize> = if ngb || loc == DEPOT {
        Vec::new()
    } else {
        s.cluster_members(loc)
            .iter()
            .copied()
            .filter(|&j| state.is_unserved(j))
            .collect()
    };
    let c_left = !dropped.is_empty();
    let drop_far = c_left
        && dropped
            .iter()
            .all(|&j| dist.get(DEPOT, j) > dist.get(DEPOT, loc));
    let drop_cls = c_left && dropped.iter().all(|&j| dist.get(loc, j) <= s.rho);
    let drop_long = c_left
        && dropped
            .iter()
            .all(|&j| s.nearest_outside[j] > dist.get(loc, j));

    let members = s.cluster_members(cust);
    let size = members.len().max(1) as f64;
    let served_here = v.customers().filter(|m| members.contains(m)).count() as f64;
    let open_members: Vec<usize> = members
        .iter()
        .copied()
        .filter(|&j| state.is_unserved(j))
        .collect();
    let open_demand: f64 = open_members.iter().map(|&j| inst.customer(j).demand).sum();
    let cls_dem = spare + 1e-9 >= open_demand;

    let others = || open_members.iter().copied().filter(|&j| j != cust);
    let hops = others()
        .filter(|&j| {
            let m = inst.customer(j);
            if v.load_used + m.demand + c.demand > inst.vehicle_capacity + 1e-9 {
                return false;
            }
            let sj = (now + dist.get(loc, j) / inst.speed).max(m.tw_open);
            if sj > m.tw_close {
                return false;
            }
            let arr_c = sj + m.service_time + dist.get(j, cust) / inst.speed;
            arr_c.max(c.tw_open) <= c.tw_close
        })
        .count() as f64;
    let done_c = start + c.service_time;
    let cls_tim =
        others().all(|j| done_c + dist.get(cust, j) / inst.speed <= inst.customer(j).tw_close);

    let urgt = (c.tw_close - arrival) / norm.t_max;
    let dfrac =
        ((gap + c.service_time) / norm.t_max) / (c.demand / inst.vehicle_capacity).max(DFRAC_EPS);
    let remote = s.mean_intra[cust] / norm.d_max;

    let fv = FeatureVector([
        clamp(d_raw / norm.d_max),
        flag(d_raw < s.rho),
        clamp(gap / norm.t_max),
        flag(gap < s.tau),
        flag(ngb),
        clamp(non_d),
        flag(c_left),
        flag(drop_far),
        flag(drop_cls),
        flag(drop_long),
        clamp(served_here / size),
        flag(cls_dem),
        clamp(hops / size),
        flag(cls_tim),
        clamp(urgt),
        dfrac,
        remote,
    ]);
    debug_assert!(guards_hold(&fv), "guard consistency violated: {fv:?}");
    fv
}

/// ngb=1 ⟹ c_left and drop_* vanish; ngb=0 ⟹ non_d=0; c_left=0 ⟹ drop_* vanish.
pub fn guards_hold(fv: &FeatureVector) -> bool {
    let f = &fv.0;
    let (ngb, non_d, c_left) = (f[4], f[5], f[6]);
    let drops = [f[7], f[8], f[9]];
    let ngb_ok = ngb == 0.0 || (c_left == 0.0 && drops.iter().all(|&x| x == 0.0));
    let non_d_ok = ngb == 1.0 || non_d == 0.0;
    let left_ok = c_left == 1.0 || drops.iter().all(|&x| x == 0.0);
    ngb_ok && non_d_ok && left_ok
}
