use serde::Deserialize;

use super::guard::Guard;
use super::RmError;
use crate::monitor::TruthAssignment;
use crate::Scalar;

/// Reward emitted when a transition fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardSpec<T> {
    Constant(T),
    /// Forwards the environment's reward for the step.
    EnvPassthrough,
}

impl<T: Scalar> RewardSpec<T> {
    pub fn resolve(self, env_reward: T) -> T {
        match self {
            RewardSpec::Constant(c) => c,
            RewardSpec::EnvPassthrough => env_reward,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub from: usize,
    pub guard: Guard,
    pub to: usize,
    pub reward: RewardSpec<T>,
}

/// Serialized reward value: a number or the string `"env"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RewardValue {
    Constant(f64),
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub from: String,
    pub guard: String,
    pub to: String,
    pub reward: RewardValue,
}

/// One `[machine.<name>]` section of a task file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSpec {
    pub states: Vec<String>,
    #[serde(default)]
    pub initial: Option<String>,
    #[serde(default)]
    pub terminal: Vec<String>,
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
}

fn default_weight() -> f64 {
    1.0
}

/// Finite-state reward machine with ordered, guarded transitions.
///
/// The first transition out of the current state whose guard holds fires.
/// When none holds the machine stays put and emits zero reward.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMachine<T> {
    pub name: String,
    pub states: Vec<String>,
    pub initial: usize,
    pub terminal: Vec<bool>,
    pub weight: T,
    pub transitions: Vec<Transition<T>>,
    outgoing: Vec<Vec<usize>>,
}

/// Two transitions out of one state that can fire on the same assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub machine: String,
    pub state: String,
    /// Declaration indices; the first one wins at runtime.
    pub first: usize,
    pub second: usize,
    pub witness: TruthAssignment,
}

/// Validates a machine section against the declared atom names.
pub fn load_machine<T: Scalar>(
    name: &str,
    spec: &MachineSpec,
    atoms: &[String],
) -> Result<RewardMachine<T>, RmError> {
    let within = |e: RmError| RmError::InMachine {
        machine: name.to_string(),
        source: Box::new(e),
    };
    if spec.states.is_empty() {
        return Err(within(RmError::NoInitialState));
    }
    for (i, s) in spec.states.iter().enumerate() {
        if spec.states[..i].contains(s) {
            return Err(within(RmError::DuplicateState(s.clone())));
        }
    }
    let state_index = |s: &str| {
        spec.states
            .iter()
            .position(|x| x == s)
            .ok_or_else(|| within(RmError::UnknownState(s.to_string())))
    };
    let initial = match &spec.initial {
        Some(s) => state_index(s)?,
        None => 0,
    };
    let mut terminal = vec![false; spec.states.len()];
    for s in &spec.terminal {
        terminal[state_index(s)?] = true;
    }
    if !spec.weight.is_finite() {
        return Err(within(RmError::NonFiniteWeight(spec.weight)));
    }
    let mut transitions = Vec::with_capacity(spec.transitions.len());
    let mut outgoing = vec![Vec::new(); spec.states.len()];
    for tr in &spec.transitions {
        let from = state_index(&tr.from)?;
        let to = state_index(&tr.to)?;
        let guard = Guard::parse(&tr.guard, atoms).map_err(within)?;
        let reward = match &tr.reward {
            RewardValue::Constant(c) if c.is_finite() => RewardSpec::Constant(T::lit(*c)),
            RewardValue::Constant(c) => return Err(within(RmError::BadReward(c.to_string()))),
            RewardValue::Keyword(k) if k == "env" => RewardSpec::EnvPassthrough,
            RewardValue::Keyword(k) => return Err(within(RmError::BadReward(k.clone()))),
        };
        outgoing[from].push(transitions.len());
        transitions.push(Transition {
            from,
            guard,
            to,
            reward,
        });
    }
    Ok(RewardMachine {
        name: name.to_string(),
        states: spec.states.clone(),
        initial,
        terminal,
        weight: T::lit(spec.weight),
        transitions,
        outgoing,
    })
}

/// Outcome of stepping one machine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineStep<T> {
    pub next: usize,
    pub reward: T,
    /// Declaration index of the transition that fired, `None` for the
    /// implicit self-loop.
    pub fired: Option<usize>,
}

impl<T: Scalar> RewardMachine<T> {
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Transitions leaving `state`, in declaration order.
    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = &Transition<T>> {
        self.outgoing[state].iter().map(|&i| &self.transitions[i])
    }

    pub fn step(&self, state: usize, sigma: TruthAssignment, env_reward: T) -> MachineStep<T> {
        for &i in &self.outgoing[state] {
            let tr = &self.transitions[i];
            if tr.guard.eval(sigma) {
                return MachineStep {
                    next: tr.to,
                    reward: tr.reward.resolve(env_reward),
                    fired: Some(i),
                };
            }
        }
        MachineStep {
            next: state,
            reward: T::zero(),
            fired: None,
        }
    }

    /// Atom indices referenced by any guard.
    pub fn atoms(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .transitions
            .iter()
            .flat_map(|t| t.guard.atoms())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Pairs of same-state transitions whose guards can hold together,
    /// found by enumerating assignments over the atoms the pair mentions.
    pub fn overlaps(&self) -> Vec<Overlap> {
        let mut found = Vec::new();
        for (state, outs) in self.outgoing.iter().enumerate() {
            for (k, &i) in outs.iter().enumerate() {
                for &j in &outs[k + 1..] {
                    let (gi, gj) = (&self.transitions[i].guard, &self.transitions[j].guard);
                    let mut used = gi.atoms();
                    used.extend(gj.atoms());
                    used.sort_unstable();
                    used.dedup();
                    let witness = (0..1u64 << used.len())
                        .map(|mask| {
                            TruthAssignment::from_indices(
                                used.iter()
                                    .enumerate()
                                    .filter(|(b, _)| mask & (1 << b) != 0)
                                    .map(|(_, &a)| a),
                            )
                        })
                        .find(|&sigma| gi.eval(sigma) && gj.eval(sigma));
                    if let Some(witness) = witness {
                        found.push(Overlap {
                            machine: self.name.clone(),
                            state: self.states[state].clone(),
                            first: i,
                            second: j,
                            witness,
                        });
                    }
                }
            }
        }
        found
    }
}

/// Single-machine step; see [`RewardMachine::step`].
pub fn step_machine<T: Scalar>(
    m: &RewardMachine<T>,
    state: usize,
    sigma: TruthAssignment,
    env_reward: T,
) -> (usize, T) {
    let s = m.step(state, sigma, env_reward);
    (s.next, s.reward)
}
