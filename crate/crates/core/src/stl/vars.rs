use std::collections::HashMap;

use crate::Scalar;

/// Default bound magnitude for variables declared without explicit bounds.
pub const DEFAULT_BOUND: f64 = 1.0e6;

/// A declared signal variable with its admissible range.
#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl<T> {
    pub name: String,
    pub lo: T,
    pub hi: T,
}

/// Ordered variable table: name → column index and bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct VarTable<T> {
    decls: Vec<VarDecl<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> Default for VarTable<T> {
    fn default() -> Self {
        Self {
            decls: Vec::new(),
            index: HashMap::new(),
        }
    }
}

impl<T: Scalar> VarTable<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable. Returns its column index, or `None` if the name is
    /// taken or the bounds are not a finite, non-empty range.
    pub fn declare(&mut self, name: &str, lo: T, hi: T) -> Option<usize> {
        if self.index.contains_key(name) || !lo.is_finite() || !hi.is_finite() || lo > hi {
            return None;
        }
        let idx = self.decls.len();
        self.decls.push(VarDecl {
            name: name.to_string(),
            lo,
            hi,
        });
        self.index.insert(name.to_string(), idx);
        Some(idx)
    }

    /// Adds a variable with the default `[-1e6, 1e6]` range.
    pub fn declare_unbounded(&mut self, name: &str) -> Option<usize> {
        self.declare(name, T::lit(-DEFAULT_BOUND), T::lit(DEFAULT_BOUND))
    }

    /// Builds a table from `(name, lo, hi)` triples, panicking on duplicates.
    pub fn from_bounds<'a>(vars: impl IntoIterator<Item = (&'a str, T, T)>) -> Self {
        let mut table = Self::new();
        for (name, lo, hi) in vars {
            table
                .declare(name, lo, hi)
                .unwrap_or_else(|| panic!("invalid declaration for variable `{name}`"));
        }
        table
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, idx: usize) -> &VarDecl<T> {
        &self.decls[idx]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.decls.iter().map(|d| d.name.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = &VarDecl<T>> {
        self.decls.iter()
    }

    pub fn bounds(&self) -> Vec<(T, T)> {
        self.decls.iter().map(|d| (d.lo, d.hi)).collect()
    }
}
