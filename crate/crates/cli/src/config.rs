//! Run configuration: defaults, a flat `key = value` file, then command-line
//! overrides, applied in that order.

use std::path::{Path, PathBuf};
use std::time::Duration;

use cvrptw_core::rollout::DEFAULT_MAX_LEN;
use cvrptw_core::{ForwardConfig, RolloutConfig, SolveConfig, TightenConfig, TrainConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Solve,
    Bench,
    Sweep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Instance files or directories of instance files.
    pub instances: Vec<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,

    pub kappa: usize,
    pub kappas: Vec<usize>,
    pub rollouts_per_branch: usize,
    pub temperature: f64,
    pub max_len: usize,
    pub optimizer: bool,
    pub delta: usize,
    pub delta_tighten: usize,
    pub timeout_ms: u64,
    pub max_optional: usize,
    pub cluster_n: usize,

    pub episodes: usize,
    pub sat_from_episode: Option<usize>,
    pub gamma: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub train_every: usize,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            instances: Vec::new(),
            model: None,
            out: PathBuf::from("out"),
            seed: None,
            kappa: 5,
            kappas: vec![1, 2, 4, 8],
            rollouts_per_branch: 1,
            temperature: 1.0,
            max_len: DEFAULT_MAX_LEN,
            optimizer: true,
            delta: 2,
            delta_tighten: 3,
            timeout_ms: 1000,
            max_optional: 4,
            cluster_n: 3,
            episodes: 6000,
            sat_from_episode: Some(4000),
            gamma: train.gamma,
            learning_rate: train.learning_rate,
            momentum: train.momentum,
            batch_size: train.batch_size,
            train_every: train.train_every,
            epsilon_start: train.epsilon_start,
            epsilon_decay: train.epsilon_decay,
        }
    }
}

pub const KEYS: &[&str] = &[
    "instances",
    "model",
    "out",
    "seed",
    "kappa",
    "kappas",
    "rollouts_per_branch",
    "temperature",
    "max_len",
    "optimizer",
    "delta",
    "delta_tighten",
    "timeout_ms",
    "max_optional",
    "cluster_n",
    "episodes",
    "sat_from_episode",
    "gamma",
    "learning_rate",
    "momentum",
    "batch_size",
    "train_every",
    "epsilon_start",
    "epsilon_decay",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("{key}: cannot parse `{value}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(CliError::Usage(format!(
            "{key}: expected true or false, got `{value}`"
        ))),
    }
}

impl RunConfig {
    /// Sets one field from its textual form. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "instances" => {
                self.instances = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from)
                    .collect()
            }
            "model" => self.model = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = Some(parse(k, value)?),
            "kappa" => self.kappa = parse(k, value)?,
            "kappas" => self.kappas = parse_list(k, value)?,
            "rollouts_per_branch" => self.rollouts_per_branch = parse(k, value)?,
            "temperature" => self.temperature = parse(k, value)?,
            "max_len" => self.max_len = parse(k, value)?,
            "optimizer" => self.optimizer = parse_bool(k, value)?,
            "delta" => self.delta = parse(k, value)?,
            "delta_tighten" => self.delta_tighten = parse(k, value)?,
            "timeout_ms" => self.timeout_ms = parse(k, value)?,
            "max_optional" => self.max_optional = parse(k, value)?,
            "cluster_n" => self.cluster_n = parse(k, value)?,
            "episodes" => self.episodes = parse(k, value)?,
            "sat_from_episode" => {
                self.sat_from_episode = if value.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(parse(k, value)?)
                }
            }
            "gamma" => self.gamma = parse(k, value)?,
            "learning_rate" => self.learning_rate = parse(k, value)?,
            "momentum" => self.momentum = parse(k, value)?,
            "batch_size" => self.batch_size = parse(k, value)?,
            "train_every" => self.train_every = parse(k, value)?,
            "epsilon_start" => self.epsilon_start = parse(k, value)?,
            "epsilon_decay" => self.epsilon_decay = parse(k, value)?,
            _ => {
                return Err(CliError::Usage(format!(
                    "unknown configuration key `{key}`"
                )))
            }
        }
        Ok(())
    }

    /// Applies a flat config file: one `key = value` per line, `#` starts a
    /// comment.
    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`", n + 1))
            })?;
            self.set(key, value)
                .map_err(|e| CliError::Usage(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn validate(&self, cmd: Command) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Usage(m));
        if cmd == Command::Bench && self.seed.is_none() {
            return bad("bench requires an explicit --seed".into());
        }
        if self.kappa == 0 || self.kappas.contains(&0) {
            return bad("kappa must be positive".into());
        }
        if cmd == Command::Sweep && self.kappas.is_empty() {
            return bad("sweep needs at least one kappa".into());
        }
        if self.rollouts_per_branch == 0 {
            return bad("rollouts_per_branch must be positive".into());
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad(format!(
                "temperature must be positive, got {}",
                self.temperature
            ));
        }
        if self.max_len == 0 {
            return bad("max_len must be positive".into());
        }
        if self.cluster_n == 0 {
            return bad("cluster_n must be positive".into());
        }
        if self.timeout_ms == 0 {
            return bad("timeout_ms must be positive".into());
        }
        if cmd == Command::Train {
            if self.episodes == 0 {
                return bad("episodes must be positive".into());
            }
            self.train_config().validate().map_err(CliError::Usage)?;
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn budget(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn tighten_config(&self) -> TightenConfig {
        TightenConfig {
            max_shift: self.delta_tighten,
            time_budget: self.budget(),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            batch_size: self.batch_size,
            train_every: self.train_every,
            epsilon_start: self.epsilon_start,
            epsilon_decay: self.epsilon_decay,
            gamma: self.gamma,
            temperature: self.temperature,
            sat_from_episode: self.sat_from_episode,
            tighten: self.tighten_config(),
            seed: self.seed(),
            ..TrainConfig::default()
        }
    }

    /// Solving configuration for one instance, with `kappa` branches and
    /// rollouts seeded by `seed`.
    pub fn solve_config(&self, kappa: usize, seed: u64) -> SolveConfig {
        let rollout = RolloutConfig {
            kappa,
            rollouts_per_branch: self.rollouts_per_branch,
            temperature: self.temperature,
            seed,
            max_len: self.max_len,
        };
        if self.optimizer {
            SolveConfig {
                rollout,
                forward: Some(ForwardConfig {
                    max_shift: self.delta,
                    time_budget: self.budget(),
                    max_optional: self.max_optional,
                }),
                tighten: Some(self.tighten_config()),
            }
        } else {
            SolveConfig::rollout_only(rollout)
        }
    }

    pub fn model_path(&self) -> PathBuf {
        self.model
            .clone()
            .unwrap_or_else(|| self.out.join("model.bin"))
    }
}
