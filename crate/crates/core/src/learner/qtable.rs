use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng;
use thiserror::Error;

use super::discretize::{Bins, Cut, Discretizer};
use crate::runtime::Task;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("snapshot does not fit the task: {0}")]
    Mismatch(String),
}

/// Action values keyed by discretized state. Unseen states read as zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QTable {
    actions: usize,
    table: HashMap<Vec<i64>, Vec<f64>>,
}

impl QTable {
    pub fn new(actions: usize) -> Self {
        Self {
            actions,
            table: HashMap::new(),
        }
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn values(&self, key: &[i64]) -> Vec<f64> {
        self.table
            .get(key)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.actions])
    }

    pub fn get(&self, key: &[i64], action: usize) -> f64 {
        self.table.get(key).map_or(0.0, |q| q[action])
    }

    pub fn max_value(&self, key: &[i64]) -> f64 {
        self.table
            .get(key)
            .map_or(0.0, |q| q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Lowest-index action with the highest value.
    pub fn greedy(&self, key: &[i64]) -> usize {
        match self.table.get(key) {
            None => 0,
            Some(q) => {
                let mut best = 0;
                for (a, &v) in q.iter().enumerate() {
                    if v > q[best] {
                        best = a;
                    }
                }
                best
            }
        }
    }

    /// Highest-value action with ties broken uniformly at random.
    pub fn greedy_random_tie<R: Rng>(&self, key: &[i64], rng: &mut R) -> usize {
        let Some(q) = self.table.get(key) else {
            return rng.gen_range(0..self.actions);
        };
        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..self.actions).filter(|&a| q[a] == best).collect();
        ties[rng.gen_range(0..ties.len())]
    }

    /// One-step Q-learning update toward `r + γ·max q(s′)`, without
    /// bootstrapping on terminal steps. Returns the new value.
    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        key: &[i64],
        action: usize,
        reward: f64,
        next: &[i64],
        terminal: bool,
        alpha: f64,
        gamma: f64,
    ) -> f64 {
        let bootstrap = if terminal {
            0.0
        } else {
            gamma * self.max_value(next)
        };
        let target = reward + bootstrap;
        let actions = self.actions;
        let q = self
            .table
            .entry(key.to_vec())
            .or_insert_with(|| vec![0.0; actions]);
        q[action] += alpha * (target - q[action]);
        q[action]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &Vec<f64>)> {
        self.table.iter()
    }

    /// Writes the table with its discretization as plain text, states in
    /// sorted order.
    pub fn write_snapshot<W: Write>(
        &self,
        task: &Task,
        disc: &Discretizer,
        mut out: W,
    ) -> std::io::Result<()> {
        writeln!(out, "# rmstl q-table")?;
        writeln!(out, "actions {}", self.actions)?;
        for (name, cut) in disc.names.iter().zip(&disc.cuts) {
            match cut {
                Cut::Exact => writeln!(out, "obs {name} exact")?,
                Cut::Binned(b) => writeln!(out, "obs {name} bins {} {} {}", b.lo, b.hi, b.n)?,
            }
        }
        for &m in &disc.machines {
            writeln!(out, "machine {}", task.machines[m].name)?;
        }
        let mut keys: Vec<&Vec<i64>> = self.table.keys().collect();
        keys.sort();
        for k in keys {
            let key: Vec<String> = k.iter().map(|v| v.to_string()).collect();
            let vals: Vec<String> = self.table[k].iter().map(|v| v.to_string()).collect();
            writeln!(out, "state {} {}", key.join(","), vals.join(" "))?;
        }
        Ok(())
    }

    /// Reads a snapshot and checks it against the task's observation,
    /// machines, and action count.
    pub fn read_snapshot<R: BufRead>(
        task: &Task,
        input: R,
    ) -> Result<(Discretizer, QTable), SnapshotError> {
        let mut actions = None;
        let mut names = Vec::new();
        let mut cuts = Vec::new();
        let mut machines = Vec::new();
        let mut table = HashMap::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let bad = |message: &str| SnapshotError::Format {
                line: lineno,
                message: message.to_string(),
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts[0] {
                "actions" => {
                    actions = Some(
                        parts
                            .get(1)
                            .and_then(|v| v.parse::<usize>().ok())
                            .ok_or_else(|| bad("expected an action count"))?,
                    )
                }
                "obs" => {
                    let name = parts.get(1).ok_or_else(|| bad("missing name"))?;
                    let cut = match parts.get(2..) {
                        Some(["exact"]) => Cut::Exact,
                        Some(["bins", lo, hi, n]) => {
                            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
                            Cut::Binned(Bins::new(
                                num(lo)?,
                                num(hi)?,
                                n.parse().map_err(|_| bad("bad bin count"))?,
                            ))
                        }
                        _ => return Err(bad("expected `exact` or `bins lo hi n`")),
                    };
                    names.push(name.to_string());
                    cuts.push(cut);
                }
                "machine" => {
                    let name = parts.get(1).ok_or_else(|| bad("missing name"))?;
                    let idx = task
                        .machines
                        .iter()
                        .position(|m| &m.name == name)
                        .ok_or_else(|| {
                            SnapshotError::Mismatch(format!("unknown machine `{name}`"))
                        })?;
                    machines.push(idx);
                }
                "state" => {
                    let n = actions.ok_or_else(|| bad("state before action count"))?;
                    let key = parts
                        .get(1)
                        .ok_or_else(|| bad("missing key"))?
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<i64>().map_err(|_| bad("bad key")))
                        .collect::<Result<Vec<_>, _>>()?;
                    let vals = parts[2..]
                        .iter()
                        .map(|s| s.parse::<f64>().map_err(|_| bad("bad value")))
                        .collect::<Result<Vec<_>, _>>()?;
                    if vals.len() != n {
                        return Err(bad("wrong number of action values"));
                    }
                    table.insert(key, vals);
                }
                other => return Err(bad(&format!("unknown record `{other}`"))),
            }
        }
        let actions = actions.ok_or_else(|| SnapshotError::Format {
            line: 0,
            message: "no action count".into(),
        })?;
        if actions != task.action_names.len() {
            return Err(SnapshotError::Mismatch(format!(
                "{actions} actions, environment has {}",
                task.action_names.len()
            )));
        }
        if names != task.observation_names {
            return Err(SnapshotError::Mismatch(format!(
                "observation [{}] differs from [{}]",
                names.join(", "),
                task.observation_names.join(", ")
            )));
        }
        let width = names.len() + machines.len();
        if let Some(k) = table.keys().find(|k| k.len() != width) {
            return Err(SnapshotError::Mismatch(format!(
                "state key of length {} where {width} is expected",
                k.len()
            )));
        }
        Ok((
            Discretizer {
                names,
                cuts,
                machines,
            },
            QTable { actions, table },
        ))
    }
}
