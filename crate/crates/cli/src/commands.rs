use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cvrptw_core::training::EpisodeLog;
use cvrptw_core::{
    check_feasible, parse_solomon, rng, run_episode, Mode, Problem, Solution, Trainer, ValueNet,
};

use crate::config::{Command, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::{self, group_label, BenchRow, InstanceResult, SweepRow};

/// Expands files and directories into a sorted list of instance files.
pub fn instance_files(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file())
                .collect();
            files.sort();
            out.extend(files);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(CliError::Data(format!(
                "{}: no such file or directory",
                p.display()
            )));
        }
    }
    Ok(out)
}

pub fn load_problems(cfg: &RunConfig) -> CliResult<Vec<Problem>> {
    instance_files(&cfg.instances)?
        .iter()
        .map(|path| {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let inst = parse_solomon(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            inst.validate()
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Ok(Problem::new(inst, cfg.cluster_n))
        })
        .collect()
}

pub fn load_model(cfg: &RunConfig) -> CliResult<ValueNet> {
    let path = cfg.model_path();
    ValueNet::load(&path).map_err(|e| CliError::Data(format!("model {}: {e}", path.display())))
}

/// Per-instance seed: the master seed mixed with the instance's name and size,
/// so results do not depend on which other instances are in the run.
pub fn instance_seed(master: u64, problem: &Problem) -> u64 {
    let inst = &problem.instance;
    rng::derive(
        master,
        &[rng::name_key(&inst.name), inst.num_customers() as u64],
    )
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Solves one instance and checks the result. Wall time covers the search
/// and optimisation only.
pub fn solve_instance(
    problem: &Problem,
    net: &ValueNet,
    cfg: &RunConfig,
    kappa: usize,
) -> (InstanceResult, Option<Solution>) {
    let inst = &problem.instance;
    let seed = instance_seed(cfg.seed(), problem);
    let mode = Mode::Solve(cfg.solve_config(kappa, seed));
    let started = Instant::now();
    let outcome = run_episode(problem, net, &mode, seed);
    let time_s = started.elapsed().as_secs_f64();
    let mut result = InstanceResult {
        instance: inst.name.clone(),
        customers: inst.num_customers(),
        group: group_label(&inst.name, inst.num_customers()),
        distance: None,
        vehicles: 0,
        time_s,
        nodes: 0,
        error: None,
    };
    match outcome {
        Ok(out) => {
            let report = check_feasible(inst, &problem.dist, &out.solution);
            if report.is_ok() {
                result.distance = Some(out.solution.total_distance);
                result.vehicles = out.solution.vehicles_used();
                result.nodes = out.stats.nodes_evaluated;
                return (result, Some(out.solution));
            }
            result.error = Some(format!("infeasible solution: {report}"));
        }
        Err(e) => result.error = Some(e.to_string()),
    }
    log::error!(
        "{}: {}",
        result.stem(),
        result.error.as_deref().unwrap_or("")
    );
    (result, None)
}

fn write_solution(dir: &Path, stem: &str, sol: &Solution) -> CliResult<()> {
    write_file(&dir.join(format!("{stem}.json")), &sol.to_json())?;
    write_file(&dir.join(format!("{stem}.csv")), &sol.to_csv())
}

fn first_failure(results: &[InstanceResult]) -> CliResult<()> {
    match results.iter().find(|r| r.error.is_some()) {
        Some(r) => Err(CliError::Invariant(format!(
            "{} of {} instances failed; first: {}: {}",
            results.iter().filter(|r| r.error.is_some()).count(),
            results.len(),
            r.stem(),
            r.error.as_deref().unwrap_or("")
        ))),
        None => Ok(()),
    }
}

fn require_instances(problems: &[Problem]) -> CliResult<()> {
    if problems.is_empty() {
        Err(CliError::Data("no instances given".into()))
    } else {
        Ok(())
    }
}

pub const TRAIN_LOG_HEADER: &str = "episode,instance,distance,vehicles,reward_mean,epsilon,loss";

pub fn train_log_row(log: &EpisodeLog) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        log.episode,
        log.instance,
        log.distance,
        log.vehicles,
        log.reward_mean,
        log.epsilon,
        log.loss.map(|v| v.to_string()).unwrap_or_default()
    )
}

/// Trains from scratch, cycling through the instances in order. Writes the
/// per-episode log to `out/train_log.csv` and the checkpoint to the model
/// path.
pub fn cmd_train(cfg: &RunConfig) -> CliResult<Vec<EpisodeLog>> {
    cfg.validate(Command::Train)?;
    let problems = load_problems(cfg)?;
    require_instances(&problems)?;
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let log_path = cfg.out.join("train_log.csv");
    let file = fs::File::create(&log_path).map_err(|e| CliError::io(&log_path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| CliError::io(&log_path, e);
    writeln!(w, "{TRAIN_LOG_HEADER}").map_err(io)?;

    let mut trainer = Trainer::new(cfg.train_config());
    let mut logs = Vec::with_capacity(cfg.episodes);
    let started = Instant::now();
    for e in 0..cfg.episodes {
        let log = trainer.run_episode(&problems[e % problems.len()])?;
        writeln!(w, "{}", train_log_row(&log)).map_err(io)?;
        logs.push(log);
        if logs.len() % 100 == 0 {
            let window = &logs[logs.len() - 100..];
            let avg = window.iter().map(|l| l.distance).sum::<f64>() / 100.0;
            log::info!(
                "episode {}: mean distance {avg:.1}, epsilon {:.3}, {:.0?}",
                logs.len(),
                window[99].epsilon,
                started.elapsed()
            );
        }
    }
    w.flush().map_err(io)?;

    let model = cfg.model_path();
    if let Some(dir) = model.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    trainer
        .net
        .save(&model)
        .map_err(|e| CliError::Data(format!("{}: {e}", model.display())))?;
    Ok(logs)
}

/// Solves every instance and writes `out/solutions/<name>-<size>.{json,csv}`.
/// Infeasible or failed solves are never written and make the command fail.
pub fn cmd_solve(cfg: &RunConfig) -> CliResult<Vec<InstanceResult>> {
    cfg.validate(Command::Solve)?;
    let problems = load_problems(cfg)?;
    require_instances(&problems)?;
    let net = load_model(cfg)?;
    let dir = cfg.out.join("solutions");
    let mut results = Vec::new();
    for p in &problems {
        let (result, sol) = solve_instance(p, &net, cfg, cfg.kappa);
        if let Some(sol) = sol {
            write_solution(&dir, &result.stem(), &sol)?;
        }
        results.push(result);
    }
    first_failure(&results)?;
    Ok(results)
}

pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub results: Vec<InstanceResult>,
}

/// Solves every instance, then writes `bench.csv` (one row per class and
/// size) and `bench_detail.csv` (one row per instance). The tables are written
/// even when some instances fail or none are given; the command then fails.
pub fn cmd_bench(cfg: &RunConfig) -> CliResult<BenchReport> {
    cfg.validate(Command::Bench)?;
    let problems = load_problems(cfg)?;
    let net = if problems.is_empty() {
        None
    } else {
        Some(load_model(cfg)?)
    };
    let dir = cfg.out.join("solutions");
    let mut results = Vec::new();
    for p in &problems {
        let (result, sol) = solve_instance(p, net.as_ref().expect("model loaded"), cfg, cfg.kappa);
        if let Some(sol) = sol {
            write_solution(&dir, &result.stem(), &sol)?;
        }
        log::info!(
            "{}: {:?} in {:.2}s",
            result.stem(),
            result.distance,
            result.time_s
        );
        results.push(result);
    }
    let rows = report::bench_rows(&results);
    write_file(&cfg.out.join("bench.csv"), &report::bench_csv(&rows))?;
    write_file(
        &cfg.out.join("bench_detail.csv"),
        &report::detail_csv(&results),
    )?;
    require_instances(&problems)?;
    first_failure(&results)?;
    Ok(BenchReport { rows, results })
}

pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub per_kappa: Vec<(usize, Vec<InstanceResult>)>,
}

/// Solves the instance set once per κ and writes `sweep.csv` and
/// `sweep_detail.csv`. Per-instance seeds do not depend on κ.
pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<SweepReport> {
    cfg.validate(Command::Sweep)?;
    let problems = load_problems(cfg)?;
    require_instances(&problems)?;
    let net = load_model(cfg)?;
    let mut rows = Vec::new();
    let mut per_kappa = Vec::new();
    for &kappa in &cfg.kappas {
        let results: Vec<InstanceResult> = problems
            .iter()
            .map(|p| solve_instance(p, &net, cfg, kappa).0)
            .collect();
        rows.push(report::sweep_row(kappa, &results));
        log::info!("kappa {kappa}: {:?}", rows.last().map(|r| r.mean_distance));
        per_kappa.push((kappa, results));
    }
    write_file(&cfg.out.join("sweep.csv"), &report::sweep_csv(&rows))?;
    write_file(
        &cfg.out.join("sweep_detail.csv"),
        &report::sweep_detail_csv(&per_kappa),
    )?;
    for (_, results) in &per_kappa {
        first_failure(results)?;
    }
    Ok(SweepReport { rows, per_kappa })
}
