//! Formula syntax, parsing, and the signal data model.

mod expr;
mod formula;
mod parser;
mod signal;
mod vars;

pub use expr::ArithExpr;
pub use formula::{Cmp, Formula, Predicate, StepInterval};
pub use parser::{parse_formula, ParseError};
pub use signal::{Signal, SignalError};
pub use vars::{VarDecl, VarTable, DEFAULT_BOUND};
