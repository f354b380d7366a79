//! Exact robustness over recorded samples.

use super::window::{sliding_extreme, Extreme};
use super::MonitorError;
use crate::stl::{Formula, Signal, StepInterval};
use crate::Scalar;

/// Robustness of `f` at every position of `samples`.
///
/// Windows that run past the last sample see it repeated, so position `p`
/// is exact whenever `p + f.horizon() < samples.len()`.
pub fn robustness_trace<T: Scalar>(f: &Formula<T>, samples: &[Vec<T>]) -> Vec<T> {
    let n = samples.len();
    match f {
        Formula::True => vec![T::infinity(); n],
        Formula::Pred(p) => samples.iter().map(|s| p.robustness(s)).collect(),
        Formula::Not(g) => robustness_trace(g, samples)
            .into_iter()
            .map(|v| -v)
            .collect(),
        Formula::And(l, r) => zip_with(
            robustness_trace(l, samples),
            robustness_trace(r, samples),
            T::min,
        ),
        Formula::Or(l, r) => zip_with(
            robustness_trace(l, samples),
            robustness_trace(r, samples),
            T::max,
        ),
        Formula::Eventually(i, g) => {
            sliding_extreme(&robustness_trace(g, samples), i.a, i.b, Extreme::Max)
        }
        Formula::Always(i, g) => {
            sliding_extreme(&robustness_trace(g, samples), i.a, i.b, Extreme::Min)
        }
        Formula::Until(i, l, r) => until_trace(
            &robustness_trace(l, samples),
            &robustness_trace(r, samples),
            *i,
        ),
    }
}

fn zip_with<T: Scalar>(a: Vec<T>, b: Vec<T>, op: impl Fn(T, T) -> T) -> Vec<T> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

fn until_trace<T: Scalar>(lhs: &[T], rhs: &[T], iv: StepInterval) -> Vec<T> {
    let n = lhs.len();
    if n == 0 {
        return Vec::new();
    }
    let last = n - 1;
    (0..n)
        .map(|t| {
            let first = (t + iv.a).min(last);
            let end = (t + iv.b).min(last);
            let mut run_min = T::infinity();
            let mut best = T::neg_infinity();
            for q in t..=end {
                run_min = run_min.min(lhs[q]);
                if q >= first {
                    best = best.max(rhs[q].min(run_min));
                }
            }
            best
        })
        .collect()
}

/// Rejects formulas containing `==` or `!=` predicates.
pub fn ensure_quantitative<T: Scalar>(f: &Formula<T>) -> Result<(), MonitorError> {
    match f.find_non_quantitative() {
        Some(p) => Err(MonitorError::UnsupportedComparison(format!(
            "{} {} 0",
            p.expr,
            p.cmp.symbol()
        ))),
        None => Ok(()),
    }
}

/// Exact robustness of `f` at step `t`.
///
/// Requires `t + horizon < len` so that every referenced sample exists.
pub fn rob_offline<T: Scalar>(f: &Formula<T>, s: &Signal<T>, t: usize) -> Result<T, MonitorError> {
    ensure_quantitative(f)?;
    let horizon = f.horizon();
    if t + horizon >= s.len() {
        return Err(MonitorError::HorizonExceedsSignal {
            t,
            horizon,
            len: s.len(),
        });
    }
    let window = &s.samples()[t..=t + horizon];
    Ok(robustness_trace(f, window)[0])
}

/// Robustness evaluated over a possibly short signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedRobustness<T> {
    pub value: T,
    /// Set when the signal ended before `t + horizon` and the last sample
    /// was held to complete the windows.
    pub truncated: bool,
}

/// Robustness at `t`, holding the last sample constant when the horizon runs
/// past the end of the signal.
pub fn rob_truncated<T: Scalar>(
    f: &Formula<T>,
    s: &Signal<T>,
    t: usize,
) -> Result<TruncatedRobustness<T>, MonitorError> {
    ensure_quantitative(f)?;
    if t >= s.len() {
        return Err(MonitorError::HorizonExceedsSignal {
            t,
            horizon: f.horizon(),
            len: s.len(),
        });
    }
    let horizon = f.horizon();
    let end = (t + horizon + 1).min(s.len());
    Ok(TruncatedRobustness {
        value: robustness_trace(f, &s.samples()[t..end])[0],
        truncated: t + horizon >= s.len(),
    })
}
