//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.
//!
//! Runs as a single test so that wall-time comparisons are not disturbed by
//! other tests in the same binary.

#[path = "../../core/tests/support/gradcheck.rs"]
mod gradcheck;
#[path = "../../core/tests/support/subtour_oracle.rs"]
mod oracle;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cvrptw_cli::commands::load_problems;
use cvrptw_cli::report::InstanceResult;
use cvrptw_cli::{cmd_bench, cmd_solve, cmd_sweep, cmd_train, RunConfig};
use cvrptw_core::subtour::optimize;
use cvrptw_core::{check_feasible, rng, Solution};

const SEEDS: [u64; 3] = [0, 1, 2];
const EPISODES: usize = 1500;
const SAT_FROM: usize = 1000;
const MA_WINDOW: usize = 200;
const QUALITY_BAR: f64 = 1.25;
const SWEEP_INSTANCES: [&str; 5] = ["C101", "R101", "RC101", "C201", "R201"];

fn data(size: usize) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../data/solomon/{size}"))
}

struct Report {
    lines: Vec<(usize, bool, String)>,
}

impl Report {
    fn record(&mut self, id: usize, pass: bool, detail: String) {
        let line = format!(
            "ACCEPTANCE {id} {}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
        self.lines.push((id, pass, line));
    }

    fn note(&self, text: &str) {
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "    {text}");
        let _ = out.flush();
    }
}

/// Defaults: κ = 5, Δ = 2, one rollout per branch, at most 4 optional
/// customers per forward problem.
fn base_config(out: &Path, seed: u64) -> RunConfig {
    RunConfig {
        instances: vec![data(25)],
        out: out.to_path_buf(),
        seed: Some(seed),
        kappa: 5,
        delta: 2,
        ..RunConfig::default()
    }
}

/// Configuration used for the quality, optimizer and κ-sweep criteria.
fn quality_config(out: &Path, seed: u64, model: &Path) -> RunConfig {
    RunConfig {
        model: Some(model.to_path_buf()),
        rollouts_per_branch: 4,
        delta: 6,
        max_optional: 12,
        ..base_config(out, seed)
    }
}

fn criterion_1(report: &mut Report) {
    let started = Instant::now();
    let mut r = rng::stream(500, &[]);
    let mut mismatches = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let (inst, dist, p) = oracle::random_problem(&mut r, 7);
        let expect = oracle::brute_force(&inst, &dist, &p).expect("feasible by construction");
        let got = optimize(&inst, &dist, &p);
        let err = (got.objective - expect).abs();
        worst = worst.max(err);
        if !got.proven_optimal || err > 1e-9 {
            mismatches += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    report.record(
        1,
        mismatches == 0 && secs < 120.0,
        format!("sub-tour optimum equals brute force on 500 problems ({mismatches} mismatches, max error {worst:.2e}, {secs:.1}s)"),
    );
}

fn moving_average(xs: &[f64], w: usize) -> Vec<f64> {
    xs.windows(w)
        .map(|v| v.iter().sum::<f64>() / w as f64)
        .collect()
}

fn criterion_3(report: &mut Report, root: &Path) -> PathBuf {
    let mut all_pass = true;
    let mut details = Vec::new();
    for seed in SEEDS {
        let mut cfg = base_config(&root.join(format!("train-{seed}")), seed);
        cfg.episodes = EPISODES;
        cfg.sat_from_episode = Some(SAT_FROM);
        let started = Instant::now();
        let logs = cmd_train(&cfg).expect("training run");
        let distances: Vec<f64> = logs.iter().map(|l| l.distance).collect();
        // Moving-average value at episode e covers episodes e - 199 ..= e.
        let ma = moving_average(&distances, MA_WINDOW);
        let at = |e: usize| ma[e + 1 - MA_WINDOW];
        let quarter = EPISODES / 4;
        let mean_over =
            |from: usize, to: usize| (from..to).map(at).sum::<f64>() / (to - from) as f64;
        let first = mean_over(MA_WINDOW - 1, quarter);
        let last = mean_over(EPISODES - quarter, EPISODES);
        all_pass &= last < first;
        details.push(format!(
            "seed {seed}: {first:.1} -> {last:.1} ({:.0}s)",
            started.elapsed().as_secs_f64()
        ));
    }
    report.record(
        3,
        all_pass,
        format!(
            "{MA_WINDOW}-episode moving average falls from first to last quarter: {}",
            details.join("; ")
        ),
    );
    root.join(format!("train-{}", SEEDS[0])).join("model.bin")
}

fn by_stem(results: &[InstanceResult]) -> BTreeMap<String, &InstanceResult> {
    results.iter().map(|r| (r.stem(), r)).collect()
}

fn criterion_2(report: &mut Report, root: &Path, model: &Path) {
    let mut cfg = base_config(&root.join("bench-default"), SEEDS[0]);
    cfg.model = Some(model.to_path_buf());
    let bench = cmd_bench(&cfg);

    // 2: every written solution re-loads and passes the checker.
    let problems = load_problems(&cfg).expect("bundled instances");
    let mut violations = 0;
    let mut missing = 0;
    for p in &problems {
        let stem = format!("{}-{}", p.instance.name, p.instance.num_customers());
        match fs::read_to_string(cfg.out.join("solutions").join(format!("{stem}.json"))) {
            Ok(text) => {
                let sol = Solution::from_json(&text).expect("solution json");
                violations += check_feasible(&p.instance, &p.dist, &sol).violations.len();
            }
            Err(_) => missing += 1,
        }
    }
    let (mean_t, max_t) = match &bench {
        Ok(b) => (
            b.results.iter().map(|r| r.time_s).sum::<f64>() / b.results.len() as f64,
            b.results.iter().map(|r| r.time_s).fold(0.0, f64::max),
        ),
        Err(_) => (f64::NAN, f64::NAN),
    };
    report.record(
        2,
        bench.is_ok() && violations == 0 && missing == 0 && problems.len() == 56,
        format!(
            "{} instances solved at kappa=5, delta=2: {violations} violations, {missing} missing; time mean {mean_t:.2}s, max {max_t:.2}s (informative target 15s)",
            problems.len()
        ),
    );
}

fn criteria_4_5(report: &mut Report, root: &Path, model: &Path) {
    let cfg = quality_config(&root.join("bench-quality"), SEEDS[0], model);
    let with_sat = match cmd_bench(&cfg) {
        Ok(b) => b,
        Err(e) => {
            report.record(4, false, format!("bench failed: {e}"));
            report.record(5, false, format!("bench failed: {e}"));
            return;
        }
    };
    // 4: mean of group means against the best-known means.
    let mut ratio_sum = 0.0;
    let mut ours = 0.0;
    let mut best = 0.0;
    for row in &with_sat.rows {
        let (d, b) = (
            row.mean_distance.unwrap_or(f64::INFINITY),
            row.best_known.unwrap_or(f64::NAN),
        );
        report.note(&format!(
            "{:<7} mean {d:8.1}  best known {b:5.0}  gap {:6.1}%",
            row.group,
            100.0 * (d - b) / b
        ));
        ratio_sum += d / b;
        ours += d;
        best += b;
    }
    let groups = with_sat.rows.len() as f64;
    let (ours, best) = (ours / groups, best / groups);
    report.record(
        4,
        with_sat.rows.len() == 6 && ours <= QUALITY_BAR * best,
        format!(
            "mean of group means {ours:.1} vs bar {:.1} (best known {best:.1}, gap {:.1}%; mean per-class ratio {:.3})",
            QUALITY_BAR * best,
            100.0 * (ours - best) / best,
            ratio_sum / groups
        ),
    );

    // 5: the optimizer never makes an instance worse on the same seed.
    let mut cfg_ro = cfg.clone();
    cfg_ro.optimizer = false;
    cfg_ro.out = root.join("bench-ro");
    match cmd_bench(&cfg_ro) {
        Ok(ro) => {
            let ro = by_stem(&ro.results);
            let mut worse = Vec::new();
            let (mut sum_sat, mut sum_ro) = (0.0, 0.0);
            for r in &with_sat.results {
                let other = ro[&r.stem()];
                let (a, b) = (r.distance.unwrap(), other.distance.unwrap());
                sum_sat += a;
                sum_ro += b;
                if a > b + 1e-9 {
                    worse.push(format!("{} {a:.1}>{b:.1}", r.stem()));
                }
            }
            let n = with_sat.results.len() as f64;
            report.record(
                5,
                worse.is_empty(),
                format!(
                    "RL+SAT+RO <= RL+RO on {}/{} instances (means {:.1} vs {:.1}){}",
                    with_sat.results.len() - worse.len(),
                    with_sat.results.len(),
                    sum_sat / n,
                    sum_ro / n,
                    if worse.is_empty() {
                        String::new()
                    } else {
                        format!("; worse: {}", worse.join(", "))
                    }
                ),
            );
        }
        Err(e) => report.record(5, false, format!("rollout-only bench failed: {e}")),
    }
}

fn criterion_6(report: &mut Report, root: &Path, model: &Path) {
    let mut cfg = quality_config(&root.join("sweep"), SEEDS[0], model);
    cfg.instances = SWEEP_INSTANCES
        .iter()
        .map(|n| data(25).join(format!("{n}.txt")))
        .collect();
    cfg.kappas = vec![1, 2, 4, 8];
    match cmd_sweep(&cfg) {
        Ok(sweep) => {
            let d: Vec<f64> = sweep
                .rows
                .iter()
                .map(|r| r.mean_distance.unwrap())
                .collect();
            let t: Vec<f64> = sweep.rows.iter().map(|r| r.mean_time_s.unwrap()).collect();
            let non_increasing = d.windows(2).all(|w| w[1] <= w[0] + 1e-9);
            let increasing = t.windows(2).all(|w| w[1] > w[0]);
            report.record(
                6,
                non_increasing && increasing,
                format!(
                    "kappa 1,2,4,8: mean distance {} (non-increasing: {non_increasing}); mean time {} (increasing: {increasing})",
                    d.iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>().join(", "),
                    t.iter().map(|v| format!("{v:.3}s")).collect::<Vec<_>>().join(", ")
                ),
            );
        }
        Err(e) => report.record(6, false, format!("sweep failed: {e}")),
    }
}

fn criterion_7(report: &mut Report) {
    let started = Instant::now();
    let errs = gradcheck::worst_relative_errors(10, 1e-5);
    let secs = started.elapsed().as_secs_f64();
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    report.record(
        7,
        worst < 1e-4 && secs < 10.0,
        format!("finite-difference gradient check on 10 configurations: max relative error {worst:.2e}, {secs:.2}s"),
    );
}

/// Drops the named columns from a CSV text.
fn without_columns(text: &str, drop: &[&str]) -> String {
    let header: Vec<&str> = text.lines().next().unwrap_or("").split(',').collect();
    let keep: Vec<usize> = (0..header.len())
        .filter(|&i| !drop.contains(&header[i]))
        .collect();
    text.lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            keep.iter()
                .map(|&i| f.get(i).copied().unwrap_or(""))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn criterion_8(report: &mut Report, root: &Path) {
    let instances: Vec<PathBuf> = ["C103", "R207", "RC104"]
        .iter()
        .map(|n| data(25).join(format!("{n}.txt")))
        .collect();
    let run = |tag: &str| -> BTreeMap<PathBuf, Vec<u8>> {
        let dir = root.join(format!("determinism-{tag}"));
        let mut cfg = base_config(&dir.join("train"), 9);
        cfg.instances = instances.clone();
        cfg.episodes = 40;
        cfg.sat_from_episode = Some(20);
        cmd_train(&cfg).expect("train");
        let model = cfg.model_path();
        let mut solve = base_config(&dir.join("solve"), 9);
        solve.instances = instances.clone();
        solve.model = Some(model.clone());
        cmd_solve(&solve).expect("solve");
        solve.out = dir.join("bench");
        cmd_bench(&solve).expect("bench");
        solve.out = dir.join("sweep");
        solve.kappas = vec![1, 3];
        cmd_sweep(&solve).expect("sweep");
        files_under(&dir)
            .into_iter()
            .map(|(p, bytes)| {
                let timing = ["time_s", "mean_time_s"];
                let name = p.file_name().unwrap().to_string_lossy().to_string();
                if [
                    "bench.csv",
                    "bench_detail.csv",
                    "sweep.csv",
                    "sweep_detail.csv",
                ]
                .contains(&name.as_str())
                {
                    (
                        p,
                        without_columns(&String::from_utf8(bytes).unwrap(), &timing).into_bytes(),
                    )
                } else {
                    (p, bytes)
                }
            })
            .collect()
    };
    let a = run("a");
    let b = run("b");
    let differing: Vec<String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    report.record(
        8,
        differing.is_empty() && !a.is_empty(),
        format!(
            "two runs of train, solve, bench and sweep: {} files compared (timing columns excluded), {} differ{}",
            a.len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(": {}", differing.join(", ")) }
        ),
    );
}

#[test]
fn acceptance() {
    let root = tempfile::tempdir().unwrap();
    let mut report = Report { lines: Vec::new() };
    criterion_1(&mut report);
    criterion_7(&mut report);
    criterion_8(&mut report, root.path());
    let model = criterion_3(&mut report, root.path());
    criterion_2(&mut report, root.path(), &model);
    criteria_4_5(&mut report, root.path(), &model);
    criterion_6(&mut report, root.path(), &model);

    report.lines.sort_by_key(|l| l.0);
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "\nACCEPTANCE SUMMARY");
    for (_, _, line) in &report.lines {
        let _ = writeln!(out, "{line}");
    }
    drop(out);
    let failed: Vec<usize> = report.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
