use std::sync::atomic::{AtomicBool, Ordering};

use crate::instance::{DistanceMatrix, Instance};
use crate::preprocess::PreprocessSummary;

static DEGENERATE_WARNED: AtomicBool = AtomicBool::new(false);

/// Scale quantities used as denominators. Zero values are replaced by 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizers {
    pub rho: f64,
    pub tau: f64,
    pub d_max: f64,
    pub t_max: f64,
}

impl Normalizers {
    pub fn from_summary(s: &PreprocessSummary) -> Self {
        let fix = |v: f64| if v > 0.0 && v.is_finite() { v } else { 1.0 };
        let out = Self {
            rho: fix(s.rho),
            tau: fix(s.tau),
            d_max: fix(s.d_max),
            t_max: fix(s.t_max),
        };
        let degenerate =
            out.rho != s.rho || out.tau != s.tau || out.d_max != s.d_max || out.t_max != s.t_max;
        if degenerate && !DEGENERATE_WARNED.swap(true, Ordering::Relaxed) {
            log::warn!(
                "degenerate normalizer (rho={}, tau={}, d_max={}, t_max={}); substituting 1",
                s.rho,
                s.tau,
                s.d_max,
                s.t_max
            );
        }
        out
    }
}

/// An instance together with everything derived from it once at load time.
/// Immutable and shared by every episode and rollout.
#[derive(Debug, Clone)]
pub struct Problem {
    pub instance: Instance,
    pub dist: DistanceMatrix,
    pub summary: PreprocessSummary,
    pub norms: Normalizers,
}

impl Problem {
    pub fn new(instance: Instance, cluster_n: usize) -> Self {
        let dist = DistanceMatrix::new(&instance);
        let summary = PreprocessSummary::new(&instance, &dist, cluster_n);
        let norms = Normalizers::from_summary(&summary);
        Self {
            instance,
            dist,
            summary,
            norms,
        }
    }

    pub fn travel_time(&self, a: usize, b: usize) -> f64 {
        self.dist.get(a, b) / self.instance.speed
    }
}
