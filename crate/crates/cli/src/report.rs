//! Benchmark grouping, best-known references and CSV rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Average best-known distance per Solomon class and size, as compiled from
/// the literature (Solomon's benchmark page and follow-up work).
const BEST_KNOWN: &[(&str, f64)] = &[
    ("C1-25", 191.0),
    ("R1-25", 464.0),
    ("RC1-25", 350.0),
    ("C2-25", 216.0),
    ("R2-25", 382.0),
    ("RC2-25", 319.0),
    ("C1-50", 362.0),
    ("R1-50", 766.0),
    ("RC1-50", 730.0),
    ("C2-50", 357.0),
    ("R2-50", 634.0),
    ("RC2-50", 585.0),
    ("C1-100", 826.0),
    ("R1-100", 1210.0),
    ("RC1-100", 1384.0),
    ("C2-100", 587.0),
    ("R2-100", 902.0),
    ("RC2-100", 1063.0),
];

pub fn best_known(group: &str) -> Option<f64> {
    BEST_KNOWN
        .iter()
        .find(|(g, _)| *g == group)
        .map(|&(_, v)| v)
}

/// `C1-25` for instance `C104` with 25 customers. Names outside the Solomon
/// pattern keep their letters.
pub fn group_label(name: &str, customers: usize) -> String {
    let letters: String = name
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .collect();
    let series = name[letters.len()..]
        .chars()
        .next()
        .filter(char::is_ascii_digit);
    match series {
        Some(d) if !letters.is_empty() => {
            format!("{}{d}-{customers}", letters.to_ascii_uppercase())
        }
        _ => format!(
            "{}-{customers}",
            if letters.is_empty() { name } else { &letters }
        ),
    }
}

/// One solved (or failed) instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub instance: String,
    pub customers: usize,
    pub group: String,
    pub distance: Option<f64>,
    pub vehicles: usize,
    pub time_s: f64,
    pub nodes: u64,
    pub error: Option<String>,
}

impl InstanceResult {
    /// File stem for this instance's outputs, e.g. `C101-25`.
    pub fn stem(&self) -> String {
        format!("{}-{}", self.instance, self.customers)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub group: String,
    pub instances: usize,
    pub failures: usize,
    pub mean_distance: Option<f64>,
    pub mean_vehicles: Option<f64>,
    pub mean_time_s: Option<f64>,
    pub best_known: Option<f64>,
}

impl BenchRow {
    /// Relative gap to the best-known mean, in percent.
    pub fn gap_pct(&self) -> Option<f64> {
        Some(100.0 * (self.mean_distance? - self.best_known?) / self.best_known?)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Groups results by label. Means are taken over the solved instances.
pub fn bench_rows(results: &[InstanceResult]) -> Vec<BenchRow> {
    let mut groups: BTreeMap<&str, Vec<&InstanceResult>> = BTreeMap::new();
    for r in results {
        groups.entry(&r.group).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(group, rs)| {
            let ok: Vec<&&InstanceResult> = rs.iter().filter(|r| r.distance.is_some()).collect();
            BenchRow {
                group: group.to_string(),
                instances: rs.len(),
                failures: rs.len() - ok.len(),
                mean_distance: mean(ok.iter().filter_map(|r| r.distance)),
                mean_vehicles: mean(ok.iter().map(|r| r.vehicles as f64)),
                mean_time_s: mean(ok.iter().map(|r| r.time_s)),
                best_known: best_known(group),
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn clean(msg: &str) -> String {
    msg.replace([',', '\n', '\r'], ";")
}

pub const BENCH_HEADER: &str =
    "group,instances,failures,mean_distance,mean_vehicles,mean_time_s,best_known,gap_pct";

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = format!("{BENCH_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.group,
            r.instances,
            r.failures,
            opt(r.mean_distance),
            opt(r.mean_vehicles),
            opt(r.mean_time_s),
            opt(r.best_known),
            opt(r.gap_pct())
        );
    }
    s
}

pub const DETAIL_HEADER: &str = "instance,customers,group,distance,vehicles,time_s,nodes,error";

pub fn detail_csv(results: &[InstanceResult]) -> String {
    let mut s = format!("{DETAIL_HEADER}\n");
    for r in results {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.instance,
            r.customers,
            r.group,
            opt(r.distance),
            r.vehicles,
            r.time_s,
            r.nodes,
            r.error.as_deref().map(clean).unwrap_or_default()
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kappa: usize,
    pub instances: usize,
    pub failures: usize,
    pub mean_distance: Option<f64>,
    pub mean_time_s: Option<f64>,
    pub mean_nodes: Option<f64>,
}

pub fn sweep_row(kappa: usize, results: &[InstanceResult]) -> SweepRow {
    let ok: Vec<&InstanceResult> = results.iter().filter(|r| r.distance.is_some()).collect();
    SweepRow {
        kappa,
        instances: results.len(),
        failures: results.len() - ok.len(),
        mean_distance: mean(ok.iter().filter_map(|r| r.distance)),
        mean_time_s: mean(ok.iter().map(|r| r.time_s)),
        mean_nodes: mean(ok.iter().map(|r| r.nodes as f64)),
    }
}

pub const SWEEP_HEADER: &str = "kappa,instances,failures,mean_distance,mean_time_s,mean_nodes";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.kappa,
            r.instances,
            r.failures,
            opt(r.mean_distance),
            opt(r.mean_time_s),
            opt(r.mean_nodes)
        );
    }
    s
}

pub const SWEEP_DETAIL_HEADER: &str = "kappa,instance,customers,distance,time_s,nodes,error";

pub fn sweep_detail_csv(per_kappa: &[(usize, Vec<InstanceResult>)]) -> String {
    let mut s = format!("{SWEEP_DETAIL_HEADER}\n");
    for (kappa, results) in per_kappa {
        for r in results {
            let _ = writeln!(
                s,
                "{kappa},{},{},{},{},{},{}",
                r.instance,
                r.customers,
                opt(r.distance),
                r.time_s,
                r.nodes,
                r.error.as_deref().map(clean).unwrap_or_default()
            );
        }
    }
    s
}
