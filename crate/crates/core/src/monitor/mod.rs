//! Quantitative STL evaluation: exact offline robustness, robustness
//! intervals over partial signals, and truth assignments for machine guards.

mod atoms;
mod interval;
mod offline;
mod online;
pub mod window;

use thiserror::Error;

pub use atoms::{
    truth_assignment, AtomKind, AtomMonitor, EvalMode, PredicateAtom, TruthAssignment, MAX_ATOMS,
};
pub use interval::RobustnessInterval;
pub use offline::{
    ensure_quantitative, rob_offline, rob_truncated, robustness_trace, TruncatedRobustness,
};
pub use online::{eval_event, rob_interval, OnlineMonitor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error("evaluating at step {t} needs {horizon} further steps but the signal has {len}")]
    HorizonExceedsSignal {
        t: usize,
        horizon: usize,
        len: usize,
    },
    #[error("predicate `{0}` has no quantitative semantics (== and != are not monitorable)")]
    UnsupportedComparison(String),
    #[error("{0} atoms declared, at most 64 are supported")]
    TooManyAtoms(usize),
}
