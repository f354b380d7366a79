//! Sliding-window extrema with a monotonic deque.

use std::collections::VecDeque;

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Min,
    Max,
}

impl Extreme {
    fn dominates<T: Scalar>(self, new: T, old: T) -> bool {
        match self {
            Extreme::Min => new <= old,
            Extreme::Max => new >= old,
        }
    }
}

/// `out[t] = ext(values[min(t+a, L) ..= min(t+b, L)])` with `L` the last
/// index, i.e. windows running past the end see the final value repeated.
///
/// Both window edges are non-decreasing in `t`, so each index enters and
/// leaves the deque at most once.
pub fn sliding_extreme<T: Scalar>(values: &[T], a: usize, b: usize, ext: Extreme) -> Vec<T> {
    debug_assert!(a <= b);
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let last = n - 1;
    let mut out = Vec::with_capacity(n);
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut pushed = 0usize;
    for t in 0..n {
        let lo = (t + a).min(last);
        let hi = (t + b).min(last);
        while pushed <= hi {
            while let Some(&back) = deque.back() {
                if ext.dominates(values[pushed], values[back]) {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(pushed);
            pushed += 1;
        }
        while let Some(&front) = deque.front() {
            if front < lo {
                deque.pop_front();
            } else {
                break;
            }
        }
        out.push(values[*deque.front().expect("window is never empty")]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(values: &[f64], a: usize, b: usize, ext: Extreme) -> Vec<f64> {
        let last = values.len() - 1;
        (0..values.len())
            .map(|t| {
                let w = &values[(t + a).min(last)..=(t + b).min(last)];
                match ext {
                    Extreme::Min => w.iter().copied().fold(f64::INFINITY, f64::min),
                    Extreme::Max => w.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect()
    }

    #[test]
    fn window_past_end_repeats_last() {
        let v = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(
            sliding_extreme(&v, 0, 2, Extreme::Max),
            vec![4.0, 4.0, 5.0, 5.0, 5.0]
        );
        assert_eq!(
            sliding_extreme(&v, 3, 9, Extreme::Min),
            vec![1.0, 5.0, 5.0, 5.0, 5.0]
        );
    }

    proptest! {
        #[test]
        fn matches_naive_scan(
            values in prop::collection::vec(-10i32..10, 1..40),
            a in 0usize..6,
            span in 0usize..8,
        ) {
            let values: Vec<f64> = values.into_iter().map(f64::from).collect();
            for ext in [Extreme::Min, Extreme::Max] {
                prop_assert_eq!(
                    sliding_extreme(&values, a, a + span, ext),
                    naive(&values, a, a + span, ext)
                );
            }
        }
    }
}
