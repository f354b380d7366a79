use std::path::Path;
use std::sync::Arc;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::discretize::{Bins, Cut, Discretizer};
use super::qtable::QTable;
use crate::runtime::{
    run_in_session, scripted, EnvConfig, Policy, PolicyView, RuntimeError, Session, Task,
    TerminalCause,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{field} = {value} is outside {range}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("bins.{0}: the observation has no such component")]
    UnknownComponent(String),
    #[error("bins.{0}: need lo < hi and n >= 1")]
    BadBins(String),
    #[error("no scripted policy `{name}` for {env}")]
    UnknownPolicy { name: String, env: &'static str },
}

/// Cut of one observation component in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CutSpec {
    Bins(Bins),
    /// The string `"exact"`.
    Keyword(ExactKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactKeyword {
    Exact,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub episodes: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episode budget over which ε decays linearly.
    pub epsilon_decay: f64,
    pub seed: u64,
    pub eval_episodes: usize,
    /// Scripted behaviour policy driving the first `demo_episodes`
    /// episodes; the table learns from them off-policy.
    pub demo_policy: Option<String>,
    pub demo_episodes: usize,
    /// Chance of a uniform random action during a demonstration step.
    pub demo_epsilon: f64,
    /// Per-component overrides of the built-in discretization.
    pub bins: IndexMap<String, CutSpec>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            episodes: 2000,
            alpha: 0.5,
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay: 0.5,
            seed: 0,
            eval_episodes: 100,
            demo_policy: None,
            demo_episodes: 0,
            demo_epsilon: 0.1,
            bins: IndexMap::new(),
        }
    }
}

impl LearnerConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |field, value: f64, ok: bool, range| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    field,
                    value,
                    range,
                })
            }
        };
        check(
            "alpha",
            self.alpha,
            self.alpha > 0.0 && self.alpha <= 1.0,
            "(0, 1]",
        )?;
        check(
            "gamma",
            self.gamma,
            self.gamma > 0.0 && self.gamma <= 1.0,
            "(0, 1]",
        )?;
        for (field, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
            ("epsilon_decay", self.epsilon_decay),
            ("demo_epsilon", self.demo_epsilon),
        ] {
            check(field, v, (0.0..=1.0).contains(&v), "[0, 1]")?;
        }
        for (name, cut) in &self.bins {
            if let CutSpec::Bins(b) = cut {
                if !(b.lo < b.hi && b.n >= 1 && b.lo.is_finite() && b.hi.is_finite()) {
                    return Err(ConfigError::BadBins(name.clone()));
                }
            }
        }
        Ok(())
    }

    /// Exploration rate for a zero-based episode index.
    pub fn epsilon(&self, episode: usize) -> f64 {
        let span = self.epsilon_decay * self.episodes as f64;
        let frac = if span <= 0.0 {
            1.0
        } else {
            (episode as f64 / span).min(1.0)
        };
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }

    /// Built-in discretization for the task with this config's overrides.
    pub fn discretizer(&self, task: &Task) -> Result<Discretizer, ConfigError> {
        let mut d = Discretizer::default_for(task);
        for (name, cut) in &self.bins {
            let cut = match cut {
                CutSpec::Bins(b) => Cut::Binned(*b),
                CutSpec::Keyword(ExactKeyword::Exact) => Cut::Exact,
            };
            if !d.set(name, cut) {
                return Err(ConfigError::UnknownComponent(name.clone()));
            }
        }
        Ok(d)
    }
}

/// Warning when cart position bins are too coarse to tell the target
/// regions apart.
pub fn coarse_bins_warning(task: &Task, disc: &Discretizer) -> Option<String> {
    if !matches!(task.env, EnvConfig::CartPole(_)) {
        return None;
    }
    match disc.cut("x") {
        Some(Cut::Binned(b)) if b.width() >= 0.2 => Some(format!(
            "x bins are {:.3} wide; regions of width 0.2 cannot be resolved (use at least 25 bins over [-2.4, 2.4])",
            b.width()
        )),
        _ => None,
    }
}

/// One training episode in the learning curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub total_reward: f64,
    pub env_return: f64,
    pub length: usize,
    pub terminal_cause: Option<TerminalCause>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub q: QTable,
    pub discretizer: Discretizer,
    pub curve: Vec<EpisodeRecord>,
}

fn episode_seed(base: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index as u64);
    rng.gen()
}

/// Tabular Q-learning on the machine reward with ε-greedy exploration,
/// optionally preceded by scripted demonstration episodes.
pub fn train(task: &Arc<Task>, cfg: &LearnerConfig) -> Result<TrainOutcome, ConfigError> {
    cfg.validate()?;
    let disc = cfg.discretizer(task)?;
    let mut demo = match &cfg.demo_policy {
        Some(name) if cfg.demo_episodes > 0 => Some(scripted(name, task.env.id()).ok_or_else(
            || ConfigError::UnknownPolicy {
                name: name.clone(),
                env: task.env.id(),
            },
        )?),
        _ => None,
    };
    let mut q = QTable::new(task.action_names.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut session = Session::new(task.clone());
    let mut curve = Vec::with_capacity(cfg.episodes);
    for ep in 0..cfg.episodes {
        let seed = episode_seed(cfg.seed, ep);
        let demo = demo.as_mut().filter(|_| ep < cfg.demo_episodes);
        let eps = if demo.is_some() {
            cfg.demo_epsilon
        } else {
            cfg.epsilon(ep)
        };
        let mut step = session.reset(seed);
        let mut demo = demo;
        if let Some(p) = demo.as_mut() {
            p.begin_episode(seed);
        }
        let mut key = disc.key(&step.env_obs, &step.layer.states);
        let (mut total, mut env_return) = (0.0, 0.0);
        while !session.is_done() {
            let scripted_action = demo.as_mut().map(|p| {
                p.act(&PolicyView {
                    t: step.layer.t,
                    obs: &step.obs,
                    env_obs: &step.env_obs,
                    states: &step.layer.states,
                    sigma: step.layer.sigma,
                    env: session.env(),
                })
            });
            let action = if rng.gen::<f64>() < eps {
                rng.gen_range(0..q.actions())
            } else if let Some(a) = scripted_action {
                a
            } else {
                q.greedy_random_tie(&key, &mut rng)
            };
            step = session
                .step(action)
                .expect("valid action on a live episode");
            let next = disc.key(&step.env_obs, &step.layer.states);
            q.update(
                &key,
                action,
                step.reward,
                &next,
                step.terminated,
                cfg.alpha,
                cfg.gamma,
            );
            total += step.reward;
            env_return += step.env_reward;
            key = next;
        }
        curve.push(EpisodeRecord {
            episode: ep,
            total_reward: total,
            env_return,
            length: step.layer.t,
            terminal_cause: step.cause,
        });
    }
    Ok(TrainOutcome {
        q,
        discretizer: disc,
        curve,
    })
}

/// Greedy policy over a trained table.
#[derive(Debug, Clone)]
pub struct QPolicy {
    pub q: QTable,
    pub discretizer: Discretizer,
}

impl Policy for QPolicy {
    fn act(&mut self, view: &PolicyView<'_>) -> usize {
        self.q
            .greedy(&self.discretizer.key(view.env_obs, view.states))
    }
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub mean_env_return: f64,
    pub std_env_return: f64,
    pub mean_length: f64,
    pub std_length: f64,
}

impl EvalSummary {
    pub fn from_records(records: &[EpisodeRecord]) -> Self {
        let col = |f: fn(&EpisodeRecord) -> f64| -> Vec<f64> { records.iter().map(f).collect() };
        let (mean_reward, std_reward) = mean_std(&col(|r| r.total_reward));
        let (mean_env_return, std_env_return) = mean_std(&col(|r| r.env_return));
        let (mean_length, std_length) = mean_std(&col(|r| r.length as f64));
        Self {
            episodes: records.len(),
            mean_reward,
            std_reward,
            mean_env_return,
            std_env_return,
            mean_length,
            std_length,
        }
    }
}

/// Seed of the `i`-th evaluation episode; shared by every run so that
/// policies are compared on the same starts.
pub fn eval_seed(i: usize) -> u64 {
    episode_seed(0xE7A1, i)
}

/// Runs `episodes` greedy episodes on the fixed evaluation seeds.
pub fn evaluate_policy(
    task: &Arc<Task>,
    policy: &mut dyn Policy,
    episodes: usize,
) -> Result<Vec<EpisodeRecord>, RuntimeError> {
    let mut session = Session::new(task.clone());
    (0..episodes)
        .map(|i| {
            let trace = run_in_session(&mut session, policy, eval_seed(i))?;
            Ok(EpisodeRecord {
                episode: i,
                total_reward: trace.total_reward(),
                env_return: trace.env_return(),
                length: trace.len(),
                terminal_cause: trace.cause(),
            })
        })
        .collect()
}
