use super::machine::RewardMachine;
use crate::monitor::TruthAssignment;
use crate::Scalar;

/// Current state of every machine, plus whether any has reached a terminal
/// state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ComposedState {
    pub states: Vec<usize>,
    pub terminal: bool,
}

impl ComposedState {
    pub fn initial<T: Scalar>(machines: &[RewardMachine<T>]) -> Self {
        let states: Vec<usize> = machines.iter().map(|m| m.initial).collect();
        let terminal = machines.iter().zip(&states).any(|(m, &u)| m.is_terminal(u));
        Self { states, terminal }
    }
}

/// Result of stepping every machine on one assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedStep<T> {
    pub state: ComposedState,
    /// Unweighted reward of each machine.
    pub rewards: Vec<T>,
    /// `Σ wᵢ·rᵢ`.
    pub total: T,
}

/// Steps all machines on the same assignment and sums their weighted
/// rewards.
pub fn step_composed<T: Scalar>(
    machines: &[RewardMachine<T>],
    cs: &ComposedState,
    sigma: TruthAssignment,
    env_reward: T,
) -> ComposedStep<T> {
    assert_eq!(
        machines.len(),
        cs.states.len(),
        "state vector size mismatch"
    );
    let mut states = Vec::with_capacity(machines.len());
    let mut rewards = Vec::with_capacity(machines.len());
    let mut total = T::zero();
    let mut terminal = false;
    for (m, &u) in machines.iter().zip(&cs.states) {
        let s = m.step(u, sigma, env_reward);
        total = total + m.weight * s.reward;
        terminal |= m.is_terminal(s.next);
        states.push(s.next);
        rewards.push(s.reward);
    }
    ComposedStep {
        state: ComposedState { states, terminal },
        rewards,
        total,
    }
}
