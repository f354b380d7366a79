use thiserror::Error;

use super::vars::VarTable;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("sample has {got} components, signal has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("time {time} is outside the recorded range of {len} steps")]
    OutOfRecordedRange { time: f64, len: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

/// Append-only multivariate discrete-time trace.
///
/// Values are piecewise constant and right-continuous: the value at real time
/// `t` is the sample recorded at step `⌊t⌋`. Samples outside the declared
/// bounds are clamped on append and the step is flagged.
#[derive(Debug, Clone)]
pub struct Signal<T> {
    vars: VarTable<T>,
    samples: Vec<Vec<T>>,
    clamped: Vec<bool>,
}

impl<T: Scalar> Signal<T> {
    pub fn new(vars: VarTable<T>) -> Self {
        Self {
            vars,
            samples: Vec::new(),
            clamped: Vec::new(),
        }
    }

    /// Builds a signal from rows, clamping as `append` would.
    pub fn from_samples(
        vars: VarTable<T>,
        rows: impl IntoIterator<Item = Vec<T>>,
    ) -> Result<Self, SignalError> {
        let mut s = Self::new(vars);
        for row in rows {
            s.append(&row)?;
        }
        Ok(s)
    }

    pub fn vars(&self) -> &VarTable<T> {
        &self.vars
    }

    /// Number of recorded steps.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Appends one sample and returns its step index.
    pub fn append(&mut self, sample: &[T]) -> Result<usize, SignalError> {
        if sample.len() != self.vars.len() {
            return Err(SignalError::DimensionMismatch {
                expected: self.vars.len(),
                got: sample.len(),
            });
        }
        let mut flagged = false;
        let row = sample
            .iter()
            .zip(self.vars.iter())
            .map(|(&v, decl)| {
                let c = if v.is_nan() {
                    decl.lo
                } else {
                    v.max(decl.lo).min(decl.hi)
                };
                flagged |= c != v;
                c
            })
            .collect();
        self.samples.push(row);
        self.clamped.push(flagged);
        Ok(self.samples.len() - 1)
    }

    pub fn sample(&self, step: usize) -> &[T] {
        &self.samples[step]
    }

    pub fn samples(&self) -> &[Vec<T>] {
        &self.samples
    }

    /// Whether the sample at `step` was clamped into bounds.
    pub fn was_clamped(&self, step: usize) -> bool {
        self.clamped[step]
    }

    pub fn any_clamped(&self) -> bool {
        self.clamped.iter().any(|&c| c)
    }

    /// Value of `var` at real time `time` (sample at `⌊time⌋`).
    pub fn value(&self, var: &str, time: f64) -> Result<T, SignalError> {
        let idx = self
            .vars
            .lookup(var)
            .ok_or_else(|| SignalError::UnknownVariable(var.to_string()))?;
        let step = time.floor();
        if !(step >= 0.0) || step as usize >= self.samples.len() {
            return Err(SignalError::OutOfRecordedRange {
                time,
                len: self.samples.len(),
            });
        }
        Ok(self.samples[step as usize][idx])
    }

    /// Copy holding only the first `len` samples.
    pub fn prefix(&self, len: usize) -> Self {
        Self {
            vars: self.vars.clone(),
            samples: self.samples[..len].to_vec(),
            clamped: self.clamped[..len].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Signal<f64> {
        Signal::new(VarTable::from_bounds([("x", -2.4, 2.4), ("y", -5.0, 5.0)]))
    }

    #[test]
    fn append_returns_indices() {
        let mut s = xy();
        assert_eq!(s.append(&[0.0, 0.0]).unwrap(), 0);
        s.append(&[0.0, 0.0]).unwrap();
        s.append(&[0.0, 0.0]).unwrap();
        assert_eq!(s.append(&[1.0, 1.0]).unwrap(), 3);
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn out_of_bounds_is_clamped_and_flagged() {
        let mut s = xy();
        s.append(&[3.0, 0.0]).unwrap();
        s.append(&[1.0, 0.0]).unwrap();
        assert_eq!(s.sample(0)[0], 2.4);
        assert!(s.was_clamped(0));
        assert!(!s.was_clamped(1));
    }

    #[test]
    fn dimension_mismatch() {
        let mut s = xy();
        assert_eq!(
            s.append(&[1.0]),
            Err(SignalError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn piecewise_constant_lookup() {
        let s = Signal::from_samples(
            VarTable::from_bounds([("x", -5.0, 5.0)]),
            [vec![1.0], vec![2.0]],
        )
        .unwrap();
        assert_eq!(s.value("x", 0.0).unwrap(), 1.0);
        assert_eq!(s.value("x", 0.9).unwrap(), 1.0);
        assert_eq!(s.value("x", 1.0).unwrap(), 2.0);
        assert!(matches!(
            s.value("x", 2.0),
            Err(SignalError::OutOfRecordedRange { .. })
        ));
        assert!(s.value("x", -0.5).is_err());
    }
}
