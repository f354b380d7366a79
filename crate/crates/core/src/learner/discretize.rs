use serde::Deserialize;

use crate::runtime::{EnvConfig, Task};

/// How one observation component maps to an integer.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bins {
    pub lo: f64,
    pub hi: f64,
    /// Number of equal-width bins over `[lo, hi]`; values outside fall in
    /// the end bins. One bin ignores the component.
    pub n: usize,
}

impl Bins {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    pub fn index(&self, v: f64) -> i64 {
        if self.n <= 1 {
            return 0;
        }
        let i = ((v - self.lo) / self.width()).floor();
        i.clamp(0.0, (self.n - 1) as f64) as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cut {
    /// Rounds to the nearest integer; for observations that are already
    /// discrete.
    Exact,
    Binned(Bins),
}

impl Cut {
    fn index(&self, v: f64) -> i64 {
        match self {
            Cut::Exact => v.round() as i64,
            Cut::Binned(b) => b.index(v),
        }
    }
}

/// Maps an augmented observation to a table key: the discretized
/// environment observation followed by the machine states.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretizer {
    pub names: Vec<String>,
    pub cuts: Vec<Cut>,
    /// Indices of the machines whose state enters the key.
    pub machines: Vec<usize>,
}

impl Discretizer {
    /// Built-in cuts for the task's environment.
    pub fn default_for(task: &Task) -> Self {
        let names = task.observation_names.clone();
        let cuts = names
            .iter()
            .map(|n| match &task.env {
                EnvConfig::Grid(_) => Cut::Exact,
                EnvConfig::CartPole(p) => Cut::Binned(match n.as_str() {
                    "x" => Bins::new(-p.x_limit, p.x_limit, 13),
                    "x_dot" => Bins::new(-3.0, 3.0, 9),
                    "theta" => Bins::new(-p.theta_limit, p.theta_limit, 13),
                    _ => Bins::new(-3.0, 3.0, 9),
                }),
                EnvConfig::Highway(_) => match n.as_str() {
                    "y_ego" => Cut::Binned(Bins::new(0.0, 1.0, 6)),
                    "vx_ego" => Cut::Binned(Bins::new(12.5, 42.5, 6)),
                    "x1" | "x2" => Cut::Binned(Bins::new(-0.1, 0.5, 6)),
                    "y1" | "y2" => Cut::Binned(Bins::new(-0.5, 0.5, 5)),
                    _ => Cut::Binned(Bins::new(0.0, 1.0, 1)),
                },
            })
            .collect();
        Self {
            names,
            cuts,
            machines: task.augment.machines.clone(),
        }
    }

    /// Replaces the cut of a named component.
    pub fn set(&mut self, name: &str, cut: Cut) -> bool {
        match self.names.iter().position(|n| n == name) {
            Some(i) => {
                self.cuts[i] = cut;
                true
            }
            None => false,
        }
    }

    pub fn cut(&self, name: &str) -> Option<Cut> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.cuts[i])
    }

    pub fn key(&self, env_obs: &[f64], states: &[usize]) -> Vec<i64> {
        let mut k: Vec<i64> = self
            .cuts
            .iter()
            .zip(env_obs)
            .map(|(c, &v)| c.index(v))
            .collect();
        k.extend(self.machines.iter().map(|&m| states[m] as i64));
        k
    }
}
