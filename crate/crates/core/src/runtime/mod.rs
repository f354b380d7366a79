//! Episode execution: an environment wrapped by the monitoring layer and
//! the machine layer, with trace recording and per-episode evaluation.

mod format;
pub mod policy;
mod session;
mod spec;
mod trace;

pub use format::fmt_g9;
pub use policy::{scripted, Policy, PolicyView, RandomPolicy};
pub use session::{LayerStep, Layers, RuntimeError, Session, SessionStep, TerminalCause};
pub use spec::{Augment, EnvConfig, FormulaDef, Role, SpecError, Task};
pub use trace::{
    eval_episode, evaluate_signal, run_episode, run_in_session, CsvTable, EpisodeMetrics,
    EpisodeTrace, FormulaEval, TraceError, TraceRow,
};
