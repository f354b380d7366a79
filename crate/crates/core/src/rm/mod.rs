//! Reward machines: guarded transitions over truth assignments, stepped in
//! parallel with a weighted reward sum.

mod compose;
mod guard;
mod machine;

use thiserror::Error;

pub use compose::{step_composed, ComposedState, ComposedStep};
pub use guard::Guard;
pub use machine::{
    load_machine, step_machine, MachineSpec, MachineStep, Overlap, RewardMachine, RewardSpec,
    RewardValue, Transition, TransitionSpec,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RmError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown atom `{0}` in guard")]
    UnknownAtom(String),
    #[error("machine declares no states, so it has no initial state")]
    NoInitialState,
    #[error("state `{0}` declared twice")]
    DuplicateState(String),
    #[error("weight {0} is not finite")]
    NonFiniteWeight(f64),
    #[error("reward `{0}` is neither a finite number nor \"env\"")]
    BadReward(String),
    #[error("guard `{guard}`: {message}")]
    GuardSyntax { guard: String, message: String },
    #[error("machine `{machine}`: {source}")]
    InMachine {
        machine: String,
        #[source]
        source: Box<RmError>,
    },
}

impl RmError {
    /// The underlying error with machine context stripped.
    pub fn root(&self) -> &RmError {
        match self {
            RmError::InMachine { source, .. } => source.root(),
            other => other,
        }
    }
}
