//! Tabular Q-learning over discretized observations paired with machine
//! states.

mod discretize;
mod qtable;
mod train;

pub use discretize::{Bins, Cut, Discretizer};
pub use qtable::{QTable, SnapshotError};
pub use train::{
    coarse_bins_warning, eval_seed, evaluate_policy, mean_std, train, ConfigError, CutSpec,
    EpisodeRecord, EvalSummary, ExactKeyword, LearnerConfig, QPolicy, TrainOutcome,
};
