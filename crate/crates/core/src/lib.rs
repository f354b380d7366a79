//! Reward machines whose transitions are driven by online STL robustness
//! monitoring, layered over small reinforcement-learning environments.

pub mod env;
pub mod learner;
pub mod monitor;
pub mod rm;
pub mod runtime;
pub mod scalar;
pub mod stl;

pub use scalar::Scalar;

pub type Formula = stl::Formula<f64>;
pub type Signal = stl::Signal<f64>;
pub type VarTable = stl::VarTable<f64>;
pub type RobustnessInterval = monitor::RobustnessInterval<f64>;
pub type PredicateAtom = monitor::PredicateAtom<f64>;
pub type RewardMachine = rm::RewardMachine<f64>;
