use std::io::{Read, Write};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use super::format::fmt_g9;
use super::policy::{Policy, PolicyView};
use super::session::{RuntimeError, Session, SessionStep, TerminalCause};
use super::spec::{Role, Task};
use crate::monitor::{rob_truncated, TruthAssignment};
use crate::{RobustnessInterval, Signal, VarTable};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace has no `{0}` column")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One recorded step. Row 0 is the reset observation and carries no
/// action, rewards, or machine transition.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub action: Option<usize>,
    pub env_obs: Vec<f64>,
    pub sample: Vec<f64>,
    pub intervals: Vec<RobustnessInterval>,
    pub sigma: TruthAssignment,
    pub states: Vec<usize>,
    pub rewards: Vec<f64>,
    pub total: f64,
    pub env_reward: f64,
    pub cause: Option<TerminalCause>,
}

impl TraceRow {
    fn from_step(action: Option<usize>, s: &SessionStep) -> Self {
        Self {
            t: s.layer.t,
            action,
            env_obs: s.env_obs.clone(),
            sample: s.sample.clone(),
            intervals: s.layer.intervals.clone(),
            sigma: s.layer.sigma,
            states: s.layer.states.clone(),
            rewards: s.layer.rewards.clone(),
            total: s.reward,
            env_reward: s.env_reward,
            cause: s.cause,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub rows: Vec<TraceRow>,
}

impl EpisodeTrace {
    /// Number of environment steps taken.
    pub fn len(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_reward(&self) -> f64 {
        self.rows.iter().map(|r| r.total).sum()
    }

    pub fn env_return(&self) -> f64 {
        self.rows.iter().map(|r| r.env_reward).sum()
    }

    pub fn cause(&self) -> Option<TerminalCause> {
        self.rows.last().and_then(|r| r.cause)
    }

    /// The recorded variable samples as a signal.
    pub fn signal(&self, vars: &VarTable) -> Signal {
        Signal::from_samples(vars.clone(), self.rows.iter().map(|r| r.sample.clone()))
            .expect("recorded samples match the declared variables")
    }

    pub fn csv_header(task: &Task) -> Vec<String> {
        let mut h = vec!["t".to_string(), "action".to_string()];
        h.extend(task.observation_names.iter().map(|n| format!("obs.{n}")));
        h.extend(task.vars.names().map(str::to_string));
        for a in &task.atoms {
            h.push(format!("lo.{}", a.name));
            h.push(format!("hi.{}", a.name));
        }
        h.push("sigma".into());
        h.extend(task.machines.iter().map(|m| format!("u.{}", m.name)));
        h.extend(task.machines.iter().map(|m| format!("r.{}", m.name)));
        h.extend(["R", "env_reward", "terminal"].map(String::from));
        h
    }

    /// One header row then one row per step; floats use nine significant
    /// digits.
    pub fn write_csv<W: Write>(&self, task: &Task, out: W) -> Result<(), TraceError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header(task))?;
        for row in &self.rows {
            let mut rec = vec![
                row.t.to_string(),
                row.action.map(|a| a.to_string()).unwrap_or_default(),
            ];
            rec.extend(row.env_obs.iter().map(|&v| fmt_g9(v)));
            rec.extend(row.sample.iter().map(|&v| fmt_g9(v)));
            for iv in &row.intervals {
                rec.push(fmt_g9(iv.lo));
                rec.push(fmt_g9(iv.hi));
            }
            let names: Vec<&str> = row
                .sigma
                .iter()
                .map(|i| task.atoms[i].name.as_str())
                .collect();
            rec.push(names.join("|"));
            rec.extend(
                task.machines
                    .iter()
                    .zip(&row.states)
                    .map(|(m, &u)| m.states[u].clone()),
            );
            rec.extend(row.rewards.iter().map(|&v| fmt_g9(v)));
            rec.push(fmt_g9(row.total));
            rec.push(fmt_g9(row.env_reward));
            rec.push(
                row.cause
                    .map(|c| c.as_str().to_string())
                    .unwrap_or_default(),
            );
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs one episode to completion, recording every step.
pub fn run_episode(
    task: &Arc<Task>,
    policy: &mut dyn Policy,
    seed: u64,
) -> Result<EpisodeTrace, RuntimeError> {
    let mut session = Session::new(task.clone());
    run_in_session(&mut session, policy, seed)
}

/// Same as [`run_episode`] but reuses an existing session.
pub fn run_in_session(
    session: &mut Session,
    policy: &mut dyn Policy,
    seed: u64,
) -> Result<EpisodeTrace, RuntimeError> {
    policy.begin_episode(seed);
    let mut step = session.reset(seed);
    let mut rows = vec![TraceRow::from_step(None, &step)];
    while !session.is_done() {
        let action = policy.act(&PolicyView {
            t: step.layer.t,
            obs: &step.obs,
            env_obs: &step.env_obs,
            states: &step.layer.states,
            sigma: step.layer.sigma,
            env: session.env(),
        });
        step = session.step(action)?;
        rows.push(TraceRow::from_step(Some(action), &step));
    }
    Ok(EpisodeTrace { seed, rows })
}

/// Robustness of one formula over a finished episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormulaEval {
    pub robustness: f64,
    /// Strictly positive robustness.
    pub satisfied: bool,
    /// Robustness exactly zero, where the Boolean verdict is ambiguous.
    pub boundary: bool,
    /// The episode ended before the formula's horizon and the last sample
    /// was held.
    pub truncated: bool,
}

/// Evaluates formulas at step 0 of a recorded signal. With `eval_only`
/// set, only formulas with the eval role are scored.
pub fn evaluate_signal(
    task: &Task,
    signal: &Signal,
    eval_only: bool,
) -> IndexMap<String, FormulaEval> {
    let mut out = IndexMap::new();
    if signal.is_empty() {
        return out;
    }
    for f in &task.formulas {
        if eval_only && f.role != Role::Eval {
            continue;
        }
        let r = rob_truncated(&f.formula, signal, 0).expect("formulas were validated at load");
        out.insert(
            f.name.clone(),
            FormulaEval {
                robustness: r.value,
                satisfied: r.value > 0.0,
                boundary: r.value == 0.0,
                truncated: r.truncated,
            },
        );
    }
    out
}

/// Scores the eval-role formulas of a task over a finished episode.
pub fn eval_episode(task: &Task, trace: &EpisodeTrace) -> IndexMap<String, FormulaEval> {
    evaluate_signal(task, &trace.signal(&task.vars), true)
}

/// Per-episode summary written as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeMetrics {
    pub seed: u64,
    pub length: usize,
    pub total_reward: f64,
    pub env_return: f64,
    pub terminal_cause: Option<TerminalCause>,
    pub eval: IndexMap<String, FormulaEval>,
}

impl EpisodeMetrics {
    pub fn of(task: &Task, trace: &EpisodeTrace) -> Self {
        Self {
            seed: trace.seed,
            length: trace.len(),
            total_reward: trace.total_reward(),
            env_return: trace.env_return(),
            terminal_cause: trace.cause(),
            eval: eval_episode(task, trace),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("metrics serialize")
    }
}

/// Header and raw string cells of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read<R: Read>(input: R) -> Result<Self, TraceError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(input);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize, TraceError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TraceError::MissingColumn(name.to_string()))
    }

    /// Rebuilds a signal from the columns named after the variables.
    pub fn signal(&self, vars: &VarTable) -> Result<Signal, TraceError> {
        let cols = vars
            .names()
            .map(|n| self.column(n))
            .collect::<Result<Vec<_>, _>>()?;
        let mut s = Signal::new(vars.clone());
        for (i, row) in self.rows.iter().enumerate() {
            let sample = cols
                .iter()
                .map(|&c| {
                    let cell = row.get(c).map(String::as_str).unwrap_or("");
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| TraceError::BadValue {
                            row: i + 1,
                            column: self.header[c].clone(),
                            value: cell.to_string(),
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            s.append(&sample).expect("one value per variable");
        }
        Ok(s)
    }
}
