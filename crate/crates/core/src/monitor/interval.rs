use std::fmt;

use crate::Scalar;

/// Enclosure `[lo, hi]` of a robustness value that may still depend on
/// unobserved samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessInterval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> RobustnessInterval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        debug_assert!(!(lo > hi), "inverted interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(v: T) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Whether `self` lies within `outer`.
    pub fn within(&self, outer: &Self) -> bool {
        outer.lo <= self.lo && self.hi <= outer.hi
    }

    pub fn neg(self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn min(self, other: Self) -> Self {
        Self {
            lo: self.lo.min(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    pub fn max(self, other: Self) -> Self {
        Self {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Identity element of `max`.
    pub fn bottom() -> Self {
        Self::point(T::neg_infinity())
    }

    /// Identity element of `min`.
    pub fn top() -> Self {
        Self::point(T::infinity())
    }
}

impl<T: Scalar> fmt::Display for RobustnessInterval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
