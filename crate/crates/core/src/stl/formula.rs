use std::fmt;

use super::expr::ArithExpr;
use crate::Scalar;

/// Comparison of a normalized predicate `expr ∼ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
    /// Accepted by the parser, rejected by every monitor.
    Eq,
    /// Accepted by the parser, rejected by every monitor.
    Ne,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
        }
    }

    /// Whether quantitative semantics are defined for this comparison.
    pub fn is_quantitative(self) -> bool {
        !matches!(self, Cmp::Eq | Cmp::Ne)
    }
}

/// Closed step interval `[a, b]` relative to the evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepInterval {
    pub a: usize,
    pub b: usize,
}

impl StepInterval {
    /// Returns `None` when `a > b`.
    pub fn new(a: usize, b: usize) -> Option<Self> {
        (a <= b).then_some(Self { a, b })
    }
}

impl fmt::Display for StepInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.a, self.b)
    }
}

/// Predicate `expr ∼ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate<T> {
    pub expr: ArithExpr<T>,
    pub cmp: Cmp,
}

impl<T: Scalar> Predicate<T> {
    /// Robustness at one sample: `expr` for `>`/`>=`, `-expr` for `<`/`<=`.
    ///
    /// Callers must reject `==`/`!=` first; for those this returns NaN.
    pub fn robustness(&self, sample: &[T]) -> T {
        let v = self.expr.eval(sample);
        match self.cmp {
            Cmp::Gt | Cmp::Ge => v,
            Cmp::Lt | Cmp::Le => -v,
            Cmp::Eq | Cmp::Ne => T::nan(),
        }
    }

    /// Robustness enclosure over a box of variable bounds.
    pub fn robustness_range(&self, bounds: &[(T, T)]) -> (T, T) {
        let (lo, hi) = self.expr.eval_range(bounds);
        match self.cmp {
            Cmp::Gt | Cmp::Ge => (lo, hi),
            Cmp::Lt | Cmp::Le => (-hi, -lo),
            Cmp::Eq | Cmp::Ne => (T::nan(), T::nan()),
        }
    }
}

/// STL abstract syntax tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula<T> {
    True,
    Pred(Predicate<T>),
    Not(Box<Formula<T>>),
    And(Box<Formula<T>>, Box<Formula<T>>),
    Or(Box<Formula<T>>, Box<Formula<T>>),
    Until(StepInterval, Box<Formula<T>>, Box<Formula<T>>),
    Eventually(StepInterval, Box<Formula<T>>),
    Always(StepInterval, Box<Formula<T>>),
}

impl<T: Scalar> Formula<T> {
    pub fn pred(expr: ArithExpr<T>, cmp: Cmp) -> Self {
        Formula::Pred(Predicate { expr, cmp })
    }

    pub fn not(f: Self) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Self, r: Self) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Self, r: Self) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn until(i: StepInterval, l: Self, r: Self) -> Self {
        Formula::Until(i, Box::new(l), Box::new(r))
    }

    pub fn eventually(i: StepInterval, f: Self) -> Self {
        Formula::Eventually(i, Box::new(f))
    }

    pub fn always(i: StepInterval, f: Self) -> Self {
        Formula::Always(i, Box::new(f))
    }

    /// Number of future steps after `t` needed to evaluate the formula
    /// exactly at `t`.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::True | Formula::Pred(_) => 0,
            Formula::Not(f) => f.horizon(),
            Formula::And(l, r) | Formula::Or(l, r) => l.horizon().max(r.horizon()),
            Formula::Until(i, l, r) => i.b + l.horizon().max(r.horizon()),
            Formula::Eventually(i, f) | Formula::Always(i, f) => i.b + f.horizon(),
        }
    }

    /// Rewrites `ev`/`alw` into `until`/`not`, the primitive operators.
    pub fn desugar(&self) -> Self {
        match self {
            Formula::True | Formula::Pred(_) => self.clone(),
            Formula::Not(f) => Formula::not(f.desugar()),
            Formula::And(l, r) => Formula::and(l.desugar(), r.desugar()),
            Formula::Or(l, r) => Formula::or(l.desugar(), r.desugar()),
            Formula::Until(i, l, r) => Formula::until(*i, l.desugar(), r.desugar()),
            Formula::Eventually(i, f) => Formula::until(*i, Formula::True, f.desugar()),
            Formula::Always(i, f) => {
                Formula::not(Formula::until(*i, Formula::True, Formula::not(f.desugar())))
            }
        }
    }

    /// First predicate using `==` or `!=`, if any.
    pub fn find_non_quantitative(&self) -> Option<&Predicate<T>> {
        match self {
            Formula::True => None,
            Formula::Pred(p) => (!p.cmp.is_quantitative()).then_some(p),
            Formula::Not(f) | Formula::Eventually(_, f) | Formula::Always(_, f) => {
                f.find_non_quantitative()
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(_, l, r) => l
                .find_non_quantitative()
                .or_else(|| r.find_non_quantitative()),
        }
    }

    /// Variable column indices referenced anywhere in the formula.
    pub fn variables(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit_preds(&mut |p| p.expr.collect_vars(&mut out));
        out.sort_unstable();
        out
    }

    fn visit_preds(&self, visit: &mut impl FnMut(&Predicate<T>)) {
        match self {
            Formula::True => {}
            Formula::Pred(p) => visit(p),
            Formula::Not(f) | Formula::Eventually(_, f) | Formula::Always(_, f) => {
                f.visit_preds(visit)
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(_, l, r) => {
                l.visit_preds(visit);
                r.visit_preds(visit);
            }
        }
    }
}

impl<T: Scalar> fmt::Display for Formula<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::Pred(p) => match &p.expr {
                // Normalized `lhs - rhs ∼ 0` prints back as `lhs ∼ rhs`.
                ArithExpr::Sub(l, r) => write!(f, "{l} {} {r}", p.cmp.symbol()),
                e => write!(f, "{e} {} 0", p.cmp.symbol()),
            },
            Formula::Not(g) => write!(f, "not ({g})"),
            Formula::And(l, r) => write!(f, "({l}) and ({r})"),
            Formula::Or(l, r) => write!(f, "({l}) or ({r})"),
            Formula::Until(i, l, r) => write!(f, "({l}) until_{i} ({r})"),
            Formula::Eventually(i, g) => write!(f, "ev_{i} ({g})"),
            Formula::Always(i, g) => write!(f, "alw_{i} ({g})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: usize, b: usize) -> StepInterval {
        StepInterval::new(a, b).unwrap()
    }

    fn p() -> Formula<f64> {
        Formula::pred(ArithExpr::var(0, "x"), Cmp::Gt)
    }

    #[test]
    fn horizons_follow_nesting() {
        assert_eq!(p().horizon(), 0);
        assert_eq!(Formula::always(iv(0, 10), p()).horizon(), 10);
        let fast = Formula::eventually(iv(0, 85), Formula::always(iv(0, 15), p()));
        assert_eq!(fast.horizon(), 100);
        let stuck = Formula::eventually(iv(100, 200), Formula::always(iv(0, 300), p()));
        assert_eq!(stuck.horizon(), 500);
        let u = Formula::until(iv(1, 4), Formula::always(iv(0, 2), p()), p());
        assert_eq!(u.horizon(), 6);
    }

    #[test]
    fn empty_interval_rejected() {
        assert!(StepInterval::new(3, 2).is_none());
        assert!(StepInterval::new(2, 2).is_some());
    }

    #[test]
    fn desugar_removes_derived_operators() {
        let f = Formula::always(iv(0, 3), Formula::eventually(iv(1, 2), p()));
        let d = f.desugar();
        fn has_derived(f: &Formula<f64>) -> bool {
            match f {
                Formula::Eventually(..) | Formula::Always(..) => true,
                Formula::True | Formula::Pred(_) => false,
                Formula::Not(g) => has_derived(g),
                Formula::And(l, r) | Formula::Or(l, r) | Formula::Until(_, l, r) => {
                    has_derived(l) || has_derived(r)
                }
            }
        }
        assert!(!has_derived(&d));
        assert_eq!(d.horizon(), f.horizon());
    }
}
