use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvrptw_cli::{cmd_bench, cmd_solve, cmd_sweep, cmd_train, CliResult, RunConfig};

#[derive(Parser)]
#[command(
    name = "cvrptw",
    version,
    about = "Learned-policy rollout solver for vehicle routing with time windows"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a value network and write a checkpoint plus a per-episode log.
    Train(Flags),
    /// Solve instances and write one solution per instance.
    Solve(Flags),
    /// Solve instances and tabulate group means against best-known values.
    Bench(Flags),
    /// Solve instances once per κ in --kappas.
    Sweep(Flags),
}

#[derive(Args)]
struct Flags {
    /// Flat `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance files or directories (repeat or separate with commas).
    #[arg(long, value_delimiter = ',')]
    instances: Vec<PathBuf>,
    /// Checkpoint to read (solve, bench, sweep) or write (train). Defaults to <out>/model.bin.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kappa: Option<usize>,
    /// Comma-separated κ values for sweep.
    #[arg(long)]
    kappas: Option<String>,
    #[arg(long)]
    rollouts_per_branch: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Longest committed sub-tour taken from a winning rollout.
    #[arg(long)]
    max_len: Option<usize>,
    /// Rollouts only: no forward or tightening optimisation.
    #[arg(long)]
    no_optimizer: bool,
    /// Position shift budget for the forward optimisation.
    #[arg(long)]
    delta: Option<usize>,
    /// Position shift budget for route tightening.
    #[arg(long)]
    delta_tighten: Option<usize>,
    /// Time budget per optimisation attempt.
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Cap on opportunistic insertions per forward optimisation.
    #[arg(long)]
    max_optional: Option<usize>,
    /// Nearest-neighbour count for clustering.
    #[arg(long)]
    cluster_n: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    /// First training episode measured after route tightening, or `none`.
    #[arg(long)]
    sat_from_episode: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    train_every: Option<usize>,
    #[arg(long)]
    epsilon_start: Option<f64>,
    #[arg(long)]
    epsilon_decay: Option<f64>,
}

impl Flags {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        fn s<T: ToString>(v: &Option<T>) -> Option<String> {
            v.as_ref().map(T::to_string)
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let mut out: Vec<(&'static str, Option<String>)> = vec![
            ("model", path(&self.model)),
            ("out", path(&self.out)),
            ("seed", s(&self.seed)),
            ("kappa", s(&self.kappa)),
            ("kappas", self.kappas.clone()),
            ("rollouts_per_branch", s(&self.rollouts_per_branch)),
            ("temperature", s(&self.temperature)),
            ("max_len", s(&self.max_len)),
            ("delta", s(&self.delta)),
            ("delta_tighten", s(&self.delta_tighten)),
            ("timeout_ms", s(&self.timeout_ms)),
            ("max_optional", s(&self.max_optional)),
            ("cluster_n", s(&self.cluster_n)),
            ("episodes", s(&self.episodes)),
            ("sat_from_episode", self.sat_from_episode.clone()),
            ("gamma", s(&self.gamma)),
            ("learning_rate", s(&self.learning_rate)),
            ("momentum", s(&self.momentum)),
            ("batch_size", s(&self.batch_size)),
            ("train_every", s(&self.train_every)),
            ("epsilon_start", s(&self.epsilon_start)),
            ("epsilon_decay", s(&self.epsilon_decay)),
        ];
        if !self.instances.is_empty() {
            let joined = self
                .instances
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(",");
            out.push(("instances", Some(joined)));
        }
        if self.no_optimizer {
            out.push(("optimizer", Some("false".into())));
        }
        out.into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect()
    }

    fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for (k, v) in self.overrides() {
            cfg.set(k, &v)?;
        }
        Ok(cfg)
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}"))
        .unwrap_or_else(|| "-".into())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Cmd::Train(f) => {
            let cfg = f.resolve()?;
            let logs = cmd_train(&cfg)?;
            let last = logs.last().expect("at least one episode");
            println!(
                "trained {} episodes; last distance {:.1}, epsilon {:.4}; model {}",
                logs.len(),
                last.distance,
                last.epsilon,
                cfg.model_path().display()
            );
        }
        Cmd::Solve(f) => {
            let cfg = f.resolve()?;
            let results = cmd_solve(&cfg)?;
            for r in results {
                println!(
                    "{} distance {} vehicles {} time {:.2}s",
                    r.stem(),
                    fmt_opt(r.distance, 2),
                    r.vehicles,
                    r.time_s
                );
            }
        }
        Cmd::Bench(f) => {
            let cfg = f.resolve()?;
            let report = cmd_bench(&cfg);
            if let Ok(report) = &report {
                println!(
                    "{:<8} {:>4} {:>10} {:>8} {:>8} {:>8}",
                    "group", "n", "distance", "best", "gap%", "time"
                );
                for r in &report.rows {
                    println!(
                        "{:<8} {:>4} {:>10} {:>8} {:>8} {:>8}",
                        r.group,
                        r.instances,
                        fmt_opt(r.mean_distance, 1),
                        fmt_opt(r.best_known, 0),
                        fmt_opt(r.gap_pct(), 1),
                        fmt_opt(r.mean_time_s, 2)
                    );
                }
            }
            report?;
        }
        Cmd::Sweep(f) => {
            let cfg = f.resolve()?;
            let report = cmd_sweep(&cfg)?;
            println!(
                "{:>5} {:>10} {:>8} {:>10}",
                "kappa", "distance", "time", "nodes"
            );
            for r in &report.rows {
                println!(
                    "{:>5} {:>10} {:>8} {:>10}",
                    r.kappa,
                    fmt_opt(r.mean_distance, 1),
                    fmt_opt(r.mean_time_s, 2),
                    fmt_opt(r.mean_nodes, 0)
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
