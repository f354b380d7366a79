use std::fmt;

use super::interval::RobustnessInterval;
use super::online::{rob_interval, OnlineMonitor};
use super::MonitorError;
use crate::stl::{Formula, Signal};
use crate::Scalar;

/// Maximum number of atoms a truth assignment can hold.
pub const MAX_ATOMS: usize = 64;

/// Which side of the robustness interval an atom tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomKind {
    /// True when the lower bound is at least the threshold.
    LowerAtLeast,
    /// True when the upper bound is at most the threshold.
    UpperAtMost,
}

/// Which evaluation time an atom's formula is monitored at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Always evaluated at step 0 of the episode.
    AtOrigin,
    /// Evaluated at `max(0, t - horizon)`.
    Sliding,
}

/// Proposition over the robustness interval of a formula.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateAtom<T> {
    pub name: String,
    pub formula: Formula<T>,
    pub kind: AtomKind,
    pub threshold: T,
    pub mode: EvalMode,
}

impl<T: Scalar> PredicateAtom<T> {
    /// Lower-bound atom with threshold 0, monitored in a sliding window.
    pub fn new(name: impl Into<String>, formula: Formula<T>) -> Self {
        Self {
            name: name.into(),
            formula,
            kind: AtomKind::LowerAtLeast,
            threshold: T::zero(),
            mode: EvalMode::Sliding,
        }
    }

    pub fn with_mode(mut self, mode: EvalMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_kind(mut self, kind: AtomKind, threshold: T) -> Self {
        self.kind = kind;
        self.threshold = threshold;
        self
    }

    pub fn horizon(&self) -> usize {
        self.formula.horizon()
    }

    /// Step at which the formula is evaluated when the latest step is `t`.
    pub fn eval_time(&self, t: usize) -> usize {
        match self.mode {
            EvalMode::AtOrigin => 0,
            EvalMode::Sliding => t.saturating_sub(self.horizon()),
        }
    }

    /// Applies the threshold test to an interval. Comparisons are
    /// non-strict, so robustness exactly at the threshold counts as true.
    pub fn holds(&self, iv: RobustnessInterval<T>) -> bool {
        match self.kind {
            AtomKind::LowerAtLeast => iv.lo >= self.threshold,
            AtomKind::UpperAtMost => iv.hi <= self.threshold,
        }
    }
}

/// Set of atoms true at a step, stored as a bitmask over atom indices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthAssignment(u64);

impl TruthAssignment {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty();
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, atom: usize) -> bool {
        atom < MAX_ATOMS && self.0 & (1 << atom) != 0
    }

    pub fn insert(&mut self, atom: usize) {
        assert!(atom < MAX_ATOMS, "atom index {atom} exceeds {MAX_ATOMS}");
        self.0 |= 1 << atom;
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_ATOMS).filter(move |&i| self.contains(i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Every assignment over the first `n` atoms.
    pub fn powerset(n: usize) -> impl Iterator<Item = TruthAssignment> {
        assert!(n < MAX_ATOMS);
        (0..1u64 << n).map(TruthAssignment)
    }
}

impl fmt::Display for TruthAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// Truth assignment at step `t`, evaluating every atom from scratch.
pub fn truth_assignment<T: Scalar>(
    atoms: &[PredicateAtom<T>],
    s: &Signal<T>,
    t: usize,
) -> Result<TruthAssignment, MonitorError> {
    let mut sigma = TruthAssignment::empty();
    for (i, atom) in atoms.iter().enumerate() {
        let iv = rob_interval(&atom.formula, s, atom.eval_time(t))?;
        if atom.holds(iv) {
            sigma.insert(i);
        }
    }
    Ok(sigma)
}

/// Incremental monitors for a fixed atom list over one episode's signal.
#[derive(Debug, Clone)]
pub struct AtomMonitor<T> {
    atoms: Vec<PredicateAtom<T>>,
    monitors: Vec<OnlineMonitor<T>>,
}

impl<T: Scalar> AtomMonitor<T> {
    pub fn new(
        atoms: Vec<PredicateAtom<T>>,
        vars: &crate::stl::VarTable<T>,
    ) -> Result<Self, MonitorError> {
        if atoms.len() > MAX_ATOMS {
            return Err(MonitorError::TooManyAtoms(atoms.len()));
        }
        let monitors = atoms
            .iter()
            .map(|a| OnlineMonitor::new(&a.formula, vars))
            .collect::<Result<_, _>>()?;
        Ok(Self { atoms, monitors })
    }

    pub fn atoms(&self) -> &[PredicateAtom<T>] {
        &self.atoms
    }

    /// Per-atom intervals at step `t` and the resulting truth assignment.
    pub fn evaluate(
        &mut self,
        s: &Signal<T>,
        t: usize,
    ) -> (TruthAssignment, Vec<RobustnessInterval<T>>) {
        let mut sigma = TruthAssignment::empty();
        let mut intervals = Vec::with_capacity(self.atoms.len());
        for (i, (atom, monitor)) in self.atoms.iter().zip(&mut self.monitors).enumerate() {
            let iv = monitor.interval(s, atom.eval_time(t));
            if atom.holds(iv) {
                sigma.insert(i);
            }
            intervals.push(iv);
        }
        (sigma, intervals)
    }
}
