//! Robustness intervals over partial signals.
//!
//! A node's value at a position whose referenced samples are all unknown is
//! the predicate ranges over the declared variable bounds, combined through
//! the operators. Every operator is monotone in its operands, so combining
//! child enclosures yields a sound enclosure. Knowing more samples only
//! replaces bound ranges with points, so intervals never widen as the signal
//! grows.

use std::collections::HashMap;

use super::interval::RobustnessInterval;
use super::offline::ensure_quantitative;
use super::window::{sliding_extreme, Extreme};
use super::MonitorError;
use crate::stl::{Formula, Predicate, Signal, StepInterval, VarTable};
use crate::Scalar;

type Iv<T> = RobustnessInterval<T>;

/// Robustness interval of `f` at step `t` given the samples recorded so far.
///
/// `t` may be at or past the end of the signal, in which case only the
/// variable bounds constrain the result.
pub fn rob_interval<T: Scalar>(
    f: &Formula<T>,
    s: &Signal<T>,
    t: usize,
) -> Result<Iv<T>, MonitorError> {
    ensure_quantitative(f)?;
    let bounds = s.vars().bounds();
    let known = if t < s.len() { &s.samples()[t..] } else { &[] };
    // Limit work to the samples the formula can reach from `t`.
    let known = &known[..known.len().min(f.horizon() + 1)];
    Ok(interval_trace(f, known, &bounds)[0])
}

/// Sliding-window evaluation: the interval at `max(0, t - horizon)`.
pub fn eval_event<T: Scalar>(
    f: &Formula<T>,
    s: &Signal<T>,
    t: usize,
) -> Result<Iv<T>, MonitorError> {
    rob_interval(f, s, t.saturating_sub(f.horizon()))
}

/// Interval values at positions `0..known.len()` followed by one entry for
/// every position past the known samples.
fn interval_trace<T: Scalar>(f: &Formula<T>, known: &[Vec<T>], bounds: &[(T, T)]) -> Vec<Iv<T>> {
    let n = known.len() + 1;
    match f {
        Formula::True => vec![Iv::top(); n],
        Formula::Pred(p) => {
            let mut out: Vec<Iv<T>> = known.iter().map(|s| Iv::point(p.robustness(s))).collect();
            out.push(unknown_pred(p, bounds));
            out
        }
        Formula::Not(g) => interval_trace(g, known, bounds)
            .into_iter()
            .map(Iv::neg)
            .collect(),
        Formula::And(l, r) => interval_trace(l, known, bounds)
            .into_iter()
            .zip(interval_trace(r, known, bounds))
            .map(|(a, b)| a.min(b))
            .collect(),
        Formula::Or(l, r) => interval_trace(l, known, bounds)
            .into_iter()
            .zip(interval_trace(r, known, bounds))
            .map(|(a, b)| a.max(b))
            .collect(),
        Formula::Eventually(i, g) => {
            sliding_interval(&interval_trace(g, known, bounds), *i, Extreme::Max)
        }
        Formula::Always(i, g) => {
            sliding_interval(&interval_trace(g, known, bounds), *i, Extreme::Min)
        }
        Formula::Until(i, l, r) => {
            let lhs = interval_trace(l, known, bounds);
            let rhs = interval_trace(r, known, bounds);
            let last = n - 1;
            (0..n)
                .map(|t| {
                    let first = (t + i.a).min(last);
                    let end = (t + i.b).min(last);
                    let mut run_min = Iv::top();
                    let mut best = Iv::bottom();
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
    }
}

fn sliding_interval<T: Scalar>(values: &[Iv<T>], iv: StepInterval, ext: Extreme) -> Vec<Iv<T>> {
    let lo: Vec<T> = values.iter().map(|v| v.lo).collect();
    let hi: Vec<T> = values.iter().map(|v| v.hi).collect();
    sliding_extreme(&lo, iv.a, iv.b, ext)
        .into_iter()
        .zip(sliding_extreme(&hi, iv.a, iv.b, ext))
        .map(|(lo, hi)| Iv::new(lo, hi))
        .collect()
}

fn unknown_pred<T: Scalar>(p: &Predicate<T>, bounds: &[(T, T)]) -> Iv<T> {
    let (lo, hi) = p.robustness_range(bounds);
    Iv::new(lo, hi)
}

#[derive(Debug, Clone)]
enum Op<T> {
    True,
    Pred(Predicate<T>),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Eventually(StepInterval, usize),
    Always(StepInterval, usize),
    Until(StepInterval, usize, usize),
}

#[derive(Debug, Clone)]
struct Node<T> {
    op: Op<T>,
    horizon: usize,
    /// Value at any position whose samples are all unknown.
    unknown: Iv<T>,
}

/// Fold over the final prefix of a temporal window, carried across steps.
#[derive(Debug, Clone, Copy)]
struct Partial<T> {
    acc: Iv<T>,
    run_min: Iv<T>,
    next: usize,
}

/// Incremental interval monitor for one formula over one growing signal.
///
/// Values at positions whose horizon is covered are cached, and temporal
/// windows keep a running fold over their covered prefix, so repeated
/// queries on a growing signal cost roughly the size of the uncovered part
/// of each window. The same signal must be passed on every call and may only
/// grow between calls.
#[derive(Debug, Clone)]
pub struct OnlineMonitor<T> {
    nodes: Vec<Node<T>>,
    root: usize,
    exact: Vec<Vec<Option<Iv<T>>>>,
    partials: Vec<HashMap<usize, Partial<T>>>,
    seen_len: usize,
}

impl<T: Scalar> OnlineMonitor<T> {
    pub fn new(f: &Formula<T>, vars: &VarTable<T>) -> Result<Self, MonitorError> {
        ensure_quantitative(f)?;
        let mut nodes = Vec::new();
        let root = compile(f, &vars.bounds(), &mut nodes);
        let count = nodes.len();
        Ok(Self {
            nodes,
            root,
            exact: vec![Vec::new(); count],
            partials: vec![HashMap::new(); count],
            seen_len: 0,
        })
    }

    pub fn horizon(&self) -> usize {
        self.nodes[self.root].horizon
    }

    /// Same result as [`rob_interval`].
    pub fn interval(&mut self, s: &Signal<T>, t: usize) -> Iv<T> {
        assert!(
            s.len() >= self.seen_len,
            "monitored signal shrank from {} to {}",
            self.seen_len,
            s.len()
        );
        self.seen_len = s.len();
        self.value(self.root, t, s.samples())
    }

    /// Same result as [`eval_event`].
    pub fn event(&mut self, s: &Signal<T>, t: usize) -> Iv<T> {
        let at = t.saturating_sub(self.horizon());
        self.interval(s, at)
    }

    fn value(&mut self, node: usize, pos: usize, samples: &[Vec<T>]) -> Iv<T> {
        let len = samples.len();
        if pos >= len {
            return self.nodes[node].unknown;
        }
        let exact = pos + self.nodes[node].horizon < len;
        if exact {
            if let Some(Some(v)) = self.exact[node].get(pos) {
                return *v;
            }
        }
        let v = match self.nodes[node].op.clone() {
            Op::True => Iv::top(),
            Op::Pred(p) => Iv::point(p.robustness(&samples[pos])),
            Op::Not(c) => self.value(c, pos, samples).neg(),
            Op::And(l, r) => self.value(l, pos, samples).min(self.value(r, pos, samples)),
            Op::Or(l, r) => self.value(l, pos, samples).max(self.value(r, pos, samples)),
            Op::Eventually(i, c) => self.window(node, pos, i, c, Extreme::Max, samples),
            Op::Always(i, c) => self.window(node, pos, i, c, Extreme::Min, samples),
            Op::Until(i, l, r) => self.until(node, pos, i, l, r, samples),
        };
        if exact {
            let cache = &mut self.exact[node];
            if cache.len() <= pos {
                cache.resize(pos + 1, None);
            }
            cache[pos] = Some(v);
            self.partials[node].remove(&pos);
        }
        v
    }

    fn window(
        &mut self,
        node: usize,
        pos: usize,
        iv: StepInterval,
        child: usize,
        ext: Extreme,
        samples: &[Vec<T>],
    ) -> Iv<T> {
        let len = samples.len();
        let combine = |a: Iv<T>, b: Iv<T>| match ext {
            Extreme::Max => a.max(b),
            Extreme::Min => a.min(b),
        };
        let identity = match ext {
            Extreme::Max => Iv::bottom(),
            Extreme::Min => Iv::top(),
        };
        let start = pos + iv.a;
        let end = pos + iv.b;
        let mut partial = self.partials[node].remove(&pos).unwrap_or(Partial {
            acc: identity,
            run_min: Iv::top(),
            next: start,
        });
        // Child positions before `covered` have exact values and are folded
        // into the carried accumulator once.
        let covered = (len.saturating_sub(self.nodes[child].horizon)).min(end + 1);
        while partial.next < covered {
            let v = self.value(child, partial.next, samples);
            partial.acc = combine(partial.acc, v);
            partial.next += 1;
        }
        let mut acc = partial.acc;
        let mut q = partial.next;
        while q <= end {
            if q >= len {
                acc = combine(acc, self.nodes[child].unknown);
                break;
            }
            acc = combine(acc, self.value(child, q, samples));
            q += 1;
        }
        self.partials[node].insert(pos, partial);
        acc
    }

    fn until(
        &mut self,
        node: usize,
        pos: usize,
        iv: StepInterval,
        lhs: usize,
        rhs: usize,
        samples: &[Vec<T>],
    ) -> Iv<T> {
        let len = samples.len();
        let start = pos + iv.a;
        let end = pos + iv.b;
        let mut partial = self.partials[node].remove(&pos).unwrap_or(Partial {
            acc: Iv::bottom(),
            run_min: Iv::top(),
            next: pos,
        });
        let child_horizon = self.nodes[lhs].horizon.max(self.nodes[rhs].horizon);
        let covered = (len.saturating_sub(child_horizon)).min(end + 1);
        while partial.next < covered {
            let q = partial.next;
            partial.run_min = partial.run_min.min(self.value(lhs, q, samples));
            if q >= start {
                partial.acc = partial
                    .acc
                    .max(self.value(rhs, q, samples).min(partial.run_min));
            }
            partial.next += 1;
        }
        let mut acc = partial.acc;
        let mut run_min = partial.run_min;
        let mut q = partial.next;
        while q <= end {
            if q >= len {
                run_min = run_min.min(self.nodes[lhs].unknown);
                acc = acc.max(self.nodes[rhs].unknown.min(run_min));
                break;
            }
            run_min = run_min.min(self.value(lhs, q, samples));
            if q >= start {
                acc = acc.max(self.value(rhs, q, samples).min(run_min));
            }
            q += 1;
        }
        self.partials[node].insert(pos, partial);
        acc
    }
}

fn compile<T: Scalar>(f: &Formula<T>, bounds: &[(T, T)], nodes: &mut Vec<Node<T>>) -> usize {
    let (op, unknown) = match f {
        Formula::True => (Op::True, Iv::top()),
        Formula::Pred(p) => (Op::Pred(p.clone()), unknown_pred(p, bounds)),
        Formula::Not(g) => {
            let c = compile(g, bounds, nodes);
            (Op::Not(c), nodes[c].unknown.neg())
        }
        Formula::And(l, r) => {
            let (l, r) = (compile(l, bounds, nodes), compile(r, bounds, nodes));
            (Op::And(l, r), nodes[l].unknown.min(nodes[r].unknown))
        }
        Formula::Or(l, r) => {
            let (l, r) = (compile(l, bounds, nodes), compile(r, bounds, nodes));
            (Op::Or(l, r), nodes[l].unknown.max(nodes[r].unknown))
        }
        Formula::Eventually(i, g) => {
            let c = compile(g, bounds, nodes);
            (Op::Eventually(*i, c), nodes[c].unknown)
        }
        Formula::Always(i, g) => {
            let c = compile(g, bounds, nodes);
            (Op::Always(*i, c), nodes[c].unknown)
        }
        Formula::Until(i, l, r) => {
            let (l, r) = (compile(l, bounds, nodes), compile(r, bounds, nodes));
            (Op::Until(*i, l, r), nodes[l].unknown.min(nodes[r].unknown))
        }
    };
    nodes.push(Node {
        op,
        horizon: f.horizon(),
        unknown,
    });
    nodes.len() - 1
}
