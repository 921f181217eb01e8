//! Vehicle routing with time windows: a value-network policy, top-κ rollout
//! search and an exact sub-tour optimizer.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod episode;
pub mod error;
pub mod features;
pub mod instance;
pub mod network;
pub mod policy;
pub mod preprocess;
pub mod problem;
pub mod replay;
pub mod rng;
pub mod rollout;
pub mod solution;
pub mod subtour;
pub mod training;

pub use episode::{run_episode, EpisodeOutcome, EpisodeState, Mode, Pair, SolveConfig};
pub use error::{ParseError, Result, SolverError};
pub use features::{FeatureVector, NUM_FEATURES};
pub use instance::{parse_solomon, DistanceMatrix, Instance, DEPOT};
pub use network::ValueNet;
pub use preprocess::PreprocessSummary;
pub use problem::Problem;
pub use rollout::RolloutConfig;
pub use solution::{check_feasible, Solution};
pub use subtour::{ForwardConfig, SubtourProblem, SubtourSolution, TightenConfig};
pub use training::{TrainConfig, Trainer};
