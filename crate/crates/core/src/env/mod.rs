//! Small simulated environments sharing one step contract, each with a
//! labeling map from its state to named signal variables.

pub mod cartpole;
pub mod gridworld;
pub mod highway;

use thiserror::Error;

pub use cartpole::{CartPole, CartPoleParams, CartPoleState};
pub use gridworld::{GridParams, GridworldUnlock, Heading};
pub use highway::{HighwayLite, HighwayParams, Vehicle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("step called after the episode ended")]
    StepAfterTerminal,
    #[error("action {action} out of range (environment has {count} actions)")]
    InvalidAction { action: usize, count: usize },
}

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

/// Seeded episodic environment with a finite action set.
pub trait Environment {
    /// Starts a new episode and returns the first observation.
    fn reset(&mut self, seed: u64) -> Vec<f64>;

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError>;

    fn action_names(&self) -> &'static [&'static str];

    fn observation_names(&self) -> Vec<String>;

    /// Names of the variables produced by [`Environment::labels`].
    fn label_names(&self) -> Vec<String>;

    /// Current values of the labeled signal variables.
    fn labels(&self) -> Vec<f64>;

    fn num_actions(&self) -> usize {
        self.action_names().len()
    }
}

/// Any of the bundled environments.
#[derive(Debug, Clone)]
pub enum Env {
    Grid(GridworldUnlock),
    CartPole(CartPole),
    Highway(HighwayLite),
}

impl Env {
    pub fn kind(&self) -> &'static str {
        match self {
            Env::Grid(_) => "gridworld",
            Env::CartPole(_) => "cartpole",
            Env::Highway(_) => "highway",
        }
    }

    pub fn as_grid(&self) -> Option<&GridworldUnlock> {
        match self {
            Env::Grid(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_cartpole(&self) -> Option<&CartPole> {
        match self {
            Env::CartPole(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_highway(&self) -> Option<&HighwayLite> {
        match self {
            Env::Highway(h) => Some(h),
            _ => None,
        }
    }

    fn inner(&self) -> &dyn Environment {
        match self {
            Env::Grid(g) => g,
            Env::CartPole(c) => c,
            Env::Highway(h) => h,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Environment {
        match self {
            Env::Grid(g) => g,
            Env::CartPole(c) => c,
            Env::Highway(h) => h,
        }
    }
}

impl Environment for Env {
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.inner_mut().reset(seed)
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        self.inner_mut().step(action)
    }

    fn action_names(&self) -> &'static [&'static str] {
        self.inner().action_names()
    }

    fn observation_names(&self) -> Vec<String> {
        self.inner().observation_names()
    }

    fn label_names(&self) -> Vec<String> {
        self.inner().label_names()
    }

    fn labels(&self) -> Vec<f64> {
        self.inner().labels()
    }
}
