//! ε-greedy training over single-step episodes with Monte-Carlo reward
//! targets and a replay buffer.

use rand::Rng;

use crate::episode::{compute_rewards, EpisodeState};
use crate::error::{Result, SolverError};
use crate::network::{Sgd, ValueNet};
use crate::policy;
use crate::problem::Problem;
use crate::replay::{ReplayBuffer, DEFAULT_CAPACITY};
use crate::rng::{self, Stream};
use crate::subtour::{self, TightenConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub train_every: usize,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub replay_capacity: usize,
    /// First episode (0-based) whose logged distance is measured after route
    /// tightening. `None` never tightens.
    pub sat_from_episode: Option<usize>,
    pub tighten: TightenConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            momentum: 0.0,
            batch_size: 4096,
            train_every: 10,
            epsilon_start: 1.0,
            epsilon_decay: 0.9995,
            gamma: 0.9,
            temperature: 1.0,
            replay_capacity: DEFAULT_CAPACITY,
            sat_from_episode: None,
            tighten: TightenConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("epsilon_decay", self.epsilon_decay),
            ("temperature", self.temperature),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.batch_size == 0 || self.train_every == 0 || self.replay_capacity == 0 {
            return Err("batch_size, train_every and replay_capacity must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || self.epsilon_decay > 1.0 {
            return Err("epsilon_start must lie in [0, 1] and epsilon_decay in (0, 1]".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub instance: String,
    pub distance: f64,
    pub vehicles: usize,
    pub reward_mean: f64,
    pub epsilon: f64,
    /// Mean pre-step loss of the gradient steps taken during the episode.
    pub loss: Option<f64>,
}

pub struct Trainer {
    pub net: ValueNet,
    pub buffer: ReplayBuffer,
    cfg: TrainConfig,
    sgd: Sgd,
    sample_rng: Stream,
    episode: usize,
    steps: u64,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Self {
        Self::with_net(ValueNet::init(cfg.seed), cfg)
    }

    /// Continues training from existing parameters.
    pub fn with_net(net: ValueNet, cfg: TrainConfig) -> Self {
        Self {
            net,
            buffer: ReplayBuffer::new(cfg.replay_capacity),
            sgd: Sgd::new(cfg.learning_rate, cfg.momentum),
            sample_rng: rng::stream(cfg.seed, &[2]),
            cfg,
            episode: 0,
            steps: 0,
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn episodes_done(&self) -> usize {
        self.episode
    }

    pub fn epsilon(&self) -> f64 {
        policy::epsilon(self.cfg.epsilon_start, self.cfg.epsilon_decay, self.episode)
    }

    /// Plays one exploration episode on `problem`, training every
    /// `train_every` decisions, then stores the episode's rewards.
    pub fn run_episode(&mut self, problem: &Problem) -> Result<EpisodeLog> {
        let epsilon = self.epsilon();
        let mut rng = rng::stream(self.cfg.seed, &[1, self.episode as u64]);
        let mut state = EpisodeState::new(problem, true);
        let mut losses = Vec::new();

        while !state.is_done() {
            let pairs = state.feasible_pairs();
            if pairs.is_empty() {
                return Err(SolverError::Stranded {
                    remaining: state.unserved_count(),
                });
            }
            let pick = if rng.gen::<f64>() < epsilon {
                rng.gen_range(0..pairs.len())
            } else {
                let values = policy::score_pairs(&state, &self.net, &pairs);
                policy::softmax_sample(&values, self.cfg.temperature, &mut rng)
            };
            state.apply_decision(pairs[pick])?;
            self.steps += 1;
            if self.steps.is_multiple_of(self.cfg.train_every as u64) && !self.buffer.is_empty() {
                let batch = self
                    .buffer
                    .sample(self.cfg.batch_size, &mut self.sample_rng)?;
                losses.push(self.sgd.step(&mut self.net, &batch)?);
            }
        }
        state.finish_all();

        let s = &problem.summary;
        let mut reward_sum = 0.0;
        let mut reward_count = 0usize;
        for traj in state.trajectories() {
            let rewards = compute_rewards(&traj, s.rho, s.tau, &problem.norms, self.cfg.gamma);
            for (leg, r) in traj.legs.iter().zip(rewards) {
                let fv = leg.features.expect("training records features");
                self.buffer.push(fv, r);
                reward_sum += r;
                reward_count += 1;
            }
        }

        let mut solution = state.to_solution();
        if self
            .cfg
            .sat_from_episode
            .is_some_and(|from| self.episode >= from)
        {
            solution = subtour::tighten_solution(problem, &solution, &self.cfg.tighten).0;
        }

        let log = EpisodeLog {
            episode: self.episode,
            instance: problem.instance.name.clone(),
            distance: solution.total_distance,
            vehicles: solution.vehicles_used(),
            reward_mean: if reward_count > 0 {
                reward_sum / reward_count as f64
            } else {
                0.0
            },
            epsilon,
            loss: (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64),
        };
        self.episode += 1;
        Ok(log)
    }
}
