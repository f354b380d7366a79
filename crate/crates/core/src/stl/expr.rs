use std::fmt;

use crate::Scalar;

/// Arithmetic expression over signal variables.
#[derive(Debug, Clone, PartialEq)]
pub enum ArithExpr<T> {
    Const(T),
    /// Column index into the variable table, plus the name for printing.
    Var(usize, String),
    Add(Box<ArithExpr<T>>, Box<ArithExpr<T>>),
    Sub(Box<ArithExpr<T>>, Box<ArithExpr<T>>),
    Mul(Box<ArithExpr<T>>, Box<ArithExpr<T>>),
    Abs(Box<ArithExpr<T>>),
    Neg(Box<ArithExpr<T>>),
}

impl<T: Scalar> ArithExpr<T> {
    pub fn var(index: usize, name: impl Into<String>) -> Self {
        ArithExpr::Var(index, name.into())
    }

    /// Evaluates at a single sample vector.
    pub fn eval(&self, sample: &[T]) -> T {
        match self {
            ArithExpr::Const(c) => *c,
            ArithExpr::Var(i, _) => sample[*i],
            ArithExpr::Add(a, b) => a.eval(sample) + b.eval(sample),
            ArithExpr::Sub(a, b) => a.eval(sample) - b.eval(sample),
            ArithExpr::Mul(a, b) => a.eval(sample) * b.eval(sample),
            ArithExpr::Abs(a) => a.eval(sample).abs(),
            ArithExpr::Neg(a) => -a.eval(sample),
        }
    }

    /// Interval enclosure of the expression over the box `bounds`
    /// (one `(lo, hi)` per variable).
    pub fn eval_range(&self, bounds: &[(T, T)]) -> (T, T) {
        match self {
            ArithExpr::Const(c) => (*c, *c),
            ArithExpr::Var(i, _) => bounds[*i],
            ArithExpr::Add(a, b) => {
                let (al, ah) = a.eval_range(bounds);
                let (bl, bh) = b.eval_range(bounds);
                (al + bl, ah + bh)
            }
            ArithExpr::Sub(a, b) => {
                let (al, ah) = a.eval_range(bounds);
                let (bl, bh) = b.eval_range(bounds);
                (al - bh, ah - bl)
            }
            ArithExpr::Mul(a, b) => {
                let (al, ah) = a.eval_range(bounds);
                let (bl, bh) = b.eval_range(bounds);
                let p = [al * bl, al * bh, ah * bl, ah * bh];
                let lo = p.iter().copied().fold(T::infinity(), T::min);
                let hi = p.iter().copied().fold(T::neg_infinity(), T::max);
                (lo, hi)
            }
            ArithExpr::Abs(a) => {
                let (l, h) = a.eval_range(bounds);
                if l >= T::zero() {
                    (l, h)
                } else if h <= T::zero() {
                    (-h, -l)
                } else {
                    (T::zero(), (-l).max(h))
                }
            }
            ArithExpr::Neg(a) => {
                let (l, h) = a.eval_range(bounds);
                (-h, -l)
            }
        }
    }

    /// Column indices referenced by the expression.
    pub fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            ArithExpr::Const(_) => {}
            ArithExpr::Var(i, _) => {
                if !out.contains(i) {
                    out.push(*i);
                }
            }
            ArithExpr::Add(a, b) | ArithExpr::Sub(a, b) | ArithExpr::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            ArithExpr::Abs(a) | ArithExpr::Neg(a) => a.collect_vars(out),
        }
    }
}

impl<T: Scalar> fmt::Display for ArithExpr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithExpr::Const(c) => write!(f, "{c}"),
            ArithExpr::Var(_, name) => f.write_str(name),
            ArithExpr::Add(a, b) => write!(f, "({a} + {b})"),
            ArithExpr::Sub(a, b) => write!(f, "({a} - {b})"),
            ArithExpr::Mul(a, b) => write!(f, "({a} * {b})"),
            ArithExpr::Abs(a) => write!(f, "abs({a})"),
            ArithExpr::Neg(a) => write!(f, "-({a})"),
        }
    }
}
