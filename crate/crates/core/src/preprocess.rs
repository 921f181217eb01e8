//! Dataset characterisation: greedy cluster growing from the depot outwards and
//! the scale quantities used to normalise features and rewards.

use std::fmt::Write as _;

use crate::instance::{DistanceMatrix, Instance, DEPOT};

/// Neighbour count used when growing clusters unless configured otherwise.
pub const DEFAULT_CLUSTER_N: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: usize,
    /// Customer ids in the order they joined the cluster.
    pub members: Vec<usize>,
    /// Largest pairwise distance between members.
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessSummary {
    pub clusters: Vec<Cluster>,
    /// Indexed by node id; `None` for the depot.
    pub cluster_of: Vec<Option<usize>>,
    /// Neighbourhood radius: half the largest cluster diameter.
    pub rho: f64,
    /// Median travel time over all unordered customer pairs.
    pub tau: f64,
    /// Largest inter-customer distance.
    pub d_max: f64,
    /// Latest window close over all customers.
    pub t_max: f64,
    pub n: usize,
    /// Per node: distance to the nearest customer outside its cluster (0 if
    /// every customer shares the cluster).
    pub nearest_outside: Vec<f64>,
    /// Per node: mean distance to the other members of its cluster (0 for
    /// singletons).
    pub mean_intra: Vec<f64>,
}

impl PreprocessSummary {
    pub fn new(inst: &Instance, dist: &DistanceMatrix, n: usize) -> Self {
        let clusters = build_clusters(inst, dist, n);
        summarize(inst, dist, clusters, n)
    }

    pub fn cluster_members(&self, node: usize) -> &[usize] {
        match self.cluster_of[node] {
            Some(k) => &self.clusters[k].members,
            None => &[],
        }
    }

    pub fn same_cluster(&self, a: usize, b: usize) -> bool {
        matches!((self.cluster_of[a], self.cluster_of[b]), (Some(x), Some(y)) if x == y)
    }

    /// `customer,cluster` rows for inspection.
    pub fn clusters_csv(&self) -> String {
        let mut s = String::from("customer,cluster\n");
        for (node, k) in self.cluster_of.iter().enumerate() {
            if let Some(k) = k {
                let _ = writeln!(s, "{node},{k}");
            }
        }
        s
    }
}

/// Splits customers into clusters without fixing their number in advance.
///
/// Each cluster is seeded with the unmapped customer nearest the depot. The
/// members are then scanned in passes; each member pulls in those of its `n`
/// nearest customers (over all customers) that are still unmapped. A pass
/// that adds nobody closes the cluster. Ties go to the smaller id.
pub fn build_clusters(inst: &Instance, dist: &DistanceMatrix, n: usize) -> Vec<Cluster> {
    assert!(n >= 1, "neighbour count must be positive");
    let count = inst.num_customers();
    let mut mapped = vec![false; count + 1];
    let mut remaining = count;
    let mut clusters = Vec::new();

    let nearest: Vec<Vec<usize>> = (0..=count)
        .map(|c| {
            if c == DEPOT {
                return Vec::new();
            }
            let mut others: Vec<usize> = (1..=count).filter(|&o| o != c).collect();
            others.sort_by(|&a, &b| dist.get(c, a).total_cmp(&dist.get(c, b)).then(a.cmp(&b)));
            others.truncate(n);
            others
        })
        .collect();

    while remaining > 0 {
        let seed = (1..=count)
            .filter(|&c| !mapped[c])
            .min_by(|&a, &b| {
                dist.get(DEPOT, a)
                    .total_cmp(&dist.get(DEPOT, b))
                    .then(a.cmp(&b))
            })
            .expect("an unmapped customer exists");
        mapped[seed] = true;
        remaining -= 1;
        let mut members = vec![seed];

        loop {
            let snapshot = members.len();
            let mut added = false;
            for k in 0..snapshot {
                for &nb in &nearest[members[k]] {
                    if !mapped[nb] {
                        mapped[nb] = true;
                        remaining -= 1;
                        members.push(nb);
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }

        let mut diameter: f64 = 0.0;
        for (k, &a) in members.iter().enumerate() {
            for &b in &members[k + 1..] {
                diameter = diameter.max(dist.get(a, b));
            }
        }
        clusters.push(Cluster {
            id: clusters.len(),
            members,
            diameter,
        });
    }
    clusters
}

/// Computes ρ, τ, d_max, t_max and the per-customer cluster statistics.
/// With no customers every quantity is 0.
pub fn summarize(
    inst: &Instance,
    dist: &DistanceMatrix,
    clusters: Vec<Cluster>,
    n: usize,
) -> PreprocessSummary {
    let count = inst.num_customers();
    let mut cluster_of = vec![None; count + 1];
    for cl in &clusters {
        for &m in &cl.members {
            cluster_of[m] = Some(cl.id);
        }
    }

    let rho = clusters.iter().map(|c| c.diameter).fold(0.0, f64::max) / 2.0;

    let mut pair_times = Vec::with_capacity(count * count.saturating_sub(1) / 2);
    let mut d_max: f64 = 0.0;
    for a in 1..=count {
        for b in (a + 1)..=count {
            let d = dist.get(a, b);
            d_max = d_max.max(d);
            pair_times.push(d / inst.speed);
        }
    }
    let tau = median(&mut pair_times);
    let t_max = inst
        .customers
        .iter()
        .map(|c| c.tw_close)
        .fold(0.0, f64::max);

    let mut nearest_outside = vec![0.0; count + 1];
    let mut mean_intra = vec![0.0; count + 1];
    for c in 1..=count {
        let own = cluster_of[c];
        nearest_outside[c] = (1..=count)
            .filter(|&o| cluster_of[o] != own)
            .map(|o| dist.get(c, o))
            .fold(f64::INFINITY, f64::min);
        if !nearest_outside[c].is_finite() {
            nearest_outside[c] = 0.0;
        }
        let members = &clusters[own.expect("every customer is clustered")].members;
        if members.len() > 1 {
            let sum: f64 = members
                .iter()
                .filter(|&&m| m != c)
                .map(|&m| dist.get(c, m))
                .sum();
            mean_intra[c] = sum / (members.len() - 1) as f64;
        }
    }

    PreprocessSummary {
        clusters,
        cluster_of,
        rho,
        tau,
        d_max,
        t_max,
        n,
        nearest_outside,
        mean_intra,
    }
}

/// Median; even counts average the two middle values. Empty input gives 0.
fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}
