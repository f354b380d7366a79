use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::spec::Task;
use crate::env::{Env, EnvError, Environment};
use crate::monitor::{AtomMonitor, TruthAssignment};
use crate::rm::{step_composed, ComposedState};
use crate::stl::SignalError;
use crate::{RobustnessInterval, Signal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("the episode has ended; call reset first")]
    EpisodeOver,
    #[error("action {action} out of range for {count} actions")]
    BadAction { action: usize, count: usize },
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalCause {
    EnvTerminal,
    RmTerminal,
    Truncated,
}

impl TerminalCause {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalCause::EnvTerminal => "env-terminal",
            TerminalCause::RmTerminal => "rm-terminal",
            TerminalCause::Truncated => "truncated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "env-terminal" => Some(TerminalCause::EnvTerminal),
            "rm-terminal" => Some(TerminalCause::RmTerminal),
            "truncated" => Some(TerminalCause::Truncated),
            _ => None,
        }
    }
}

impl fmt::Display for TerminalCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Output of the monitoring and machine layers for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStep {
    pub t: usize,
    pub sigma: TruthAssignment,
    /// One interval per atom.
    pub intervals: Vec<RobustnessInterval>,
    /// Machine states after this step.
    pub states: Vec<usize>,
    /// Unweighted reward of each machine.
    pub rewards: Vec<f64>,
    /// Weighted sum of `rewards`.
    pub total: f64,
    pub rm_terminal: bool,
}

/// Monitoring layer followed by the machine layer, fed with variable
/// samples rather than an environment.
///
/// `reset` records step 0 without stepping the machines; every `step`
/// appends the next sample, evaluates the atoms at that step, and advances
/// every machine once.
#[derive(Debug, Clone)]
pub struct Layers {
    task: Arc<Task>,
    signal: Signal,
    monitor: AtomMonitor<f64>,
    state: ComposedState,
}

impl Layers {
    pub fn new(task: Arc<Task>) -> Self {
        let monitor = AtomMonitor::new(task.atoms.clone(), &task.vars)
            .expect("atoms were validated when the task was loaded");
        Self {
            signal: Signal::new(task.vars.clone()),
            state: ComposedState::initial(&task.machines),
            monitor,
            task,
        }
    }

    pub fn task(&self) -> &Arc<Task> {
        &self.task
    }

    pub fn signal(&self) -> &Signal {
        &self.signal
    }

    pub fn states(&self) -> &[usize] {
        &self.state.states
    }

    fn observe(
        &mut self,
        sample: &[f64],
    ) -> Result<(usize, TruthAssignment, Vec<RobustnessInterval>), RuntimeError> {
        let t = self.signal.append(sample)?;
        let (sigma, intervals) = self.monitor.evaluate(&self.signal, t);
        Ok((t, sigma, intervals))
    }

    pub fn reset(&mut self, sample: &[f64]) -> Result<LayerStep, RuntimeError> {
        self.signal = Signal::new(self.task.vars.clone());
        self.monitor = AtomMonitor::new(self.task.atoms.clone(), &self.task.vars)
            .expect("atoms were validated when the task was loaded");
        self.state = ComposedState::initial(&self.task.machines);
        let (t, sigma, intervals) = self.observe(sample)?;
        Ok(LayerStep {
            t,
            sigma,
            intervals,
            states: self.state.states.clone(),
            rewards: vec![0.0; self.task.machines.len()],
            total: 0.0,
            rm_terminal: self.state.terminal,
        })
    }

    pub fn step(&mut self, sample: &[f64], env_reward: f64) -> Result<LayerStep, RuntimeError> {
        let (t, sigma, intervals) = self.observe(sample)?;
        let out = step_composed(&self.task.machines, &self.state, sigma, env_reward);
        self.state = out.state;
        Ok(LayerStep {
            t,
            sigma,
            intervals,
            states: self.state.states.clone(),
            rewards: out.rewards,
            total: out.total,
            rm_terminal: self.state.terminal,
        })
    }

    /// Environment observation followed by the one-hot machine states and
    /// clipped robustness lower bounds selected by the task.
    pub fn augment(&self, env_obs: &[f64], step: &LayerStep) -> Vec<f64> {
        let aug = &self.task.augment;
        let mut obs = Vec::with_capacity(self.task.observation_len());
        obs.extend_from_slice(env_obs);
        for &m in &aug.machines {
            let n = self.task.machines[m].num_states();
            obs.extend((0..n).map(|u| if u == step.states[m] { 1.0 } else { 0.0 }));
        }
        for &a in &aug.robustness {
            obs.push(step.intervals[a].lo.clamp(-aug.clip, aug.clip));
        }
        obs
    }
}

/// One environment step seen through both layers.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionStep {
    /// Augmented observation.
    pub obs: Vec<f64>,
    pub env_obs: Vec<f64>,
    /// Variable values recorded in the signal.
    pub sample: Vec<f64>,
    pub layer: LayerStep,
    /// Composed machine reward; replaces the environment reward.
    pub reward: f64,
    pub env_reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub cause: Option<TerminalCause>,
}

/// An environment wrapped by the monitoring and machine layers.
#[derive(Debug, Clone)]
pub struct Session {
    env: Env,
    layers: Layers,
    done: bool,
}

impl Session {
    pub fn new(task: Arc<Task>) -> Self {
        Self {
            env: task.env.build(),
            layers: Layers::new(task),
            done: true,
        }
    }

    pub fn task(&self) -> &Arc<Task> {
        self.layers.task()
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn layers(&self) -> &Layers {
        &self.layers
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn reset(&mut self, seed: u64) -> SessionStep {
        let env_obs = self.env.reset(seed);
        let sample = self.layers.task().sample_from_labels(&self.env.labels());
        let layer = self
            .layers
            .reset(&sample)
            .expect("sample width matches the declared variables");
        self.done = false;
        SessionStep {
            obs: self.layers.augment(&env_obs, &layer),
            env_obs,
            sample,
            layer,
            reward: 0.0,
            env_reward: 0.0,
            terminated: false,
            truncated: false,
            cause: None,
        }
    }

    pub fn step(&mut self, action: usize) -> Result<SessionStep, RuntimeError> {
        if self.done {
            return Err(RuntimeError::EpisodeOver);
        }
        let count = self.env.num_actions();
        if action >= count {
            return Err(RuntimeError::BadAction { action, count });
        }
        let r = self.env.step(action)?;
        let sample = self.layers.task().sample_from_labels(&self.env.labels());
        let layer = self.layers.step(&sample, r.reward)?;
        let horizon_reached = layer.t >= self.layers.task().horizon;
        let cause = if r.terminated {
            Some(TerminalCause::EnvTerminal)
        } else if layer.rm_terminal {
            Some(TerminalCause::RmTerminal)
        } else if r.truncated || horizon_reached {
            Some(TerminalCause::Truncated)
        } else {
            None
        };
        self.done = cause.is_some();
        Ok(SessionStep {
            obs: self.layers.augment(&r.obs, &layer),
            env_obs: r.obs,
            sample,
            reward: layer.total,
            layer,
            env_reward: r.reward,
            terminated: matches!(
                cause,
                Some(TerminalCause::EnvTerminal | TerminalCause::RmTerminal)
            ),
            truncated: cause == Some(TerminalCause::Truncated),
            cause,
        })
    }
}
