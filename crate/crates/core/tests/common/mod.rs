//! Helpers shared by the integration suites: the fixture corpus, a direct
//! transcription of the robustness definitions, and random formulas.

#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rmstl::runtime::Task;
use rmstl::stl::{ArithExpr, Cmp, Formula};

pub fn spec_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("specs")
        .join(name)
}

pub fn load(name: &str) -> Arc<Task> {
    Arc::new(Task::load(spec_path(name)).unwrap_or_else(|e| panic!("{name}: {e}")))
}

/// Task files whose formulas and machines make up the fixture corpus.
pub const CORPUS: [&str; 5] = [
    "gridworld-6.toml",
    "gridworld-6-vanilla.toml",
    "cartpole-ab.toml",
    "cartpole-ab-r1.toml",
    "highway.toml",
];

pub fn corpus_tasks() -> Vec<(&'static str, Arc<Task>)> {
    CORPUS.iter().map(|n| (*n, load(n))).collect()
}

fn arith(e: &ArithExpr<f64>, x: &[f64]) -> f64 {
    match e {
        ArithExpr::Const(c) => *c,
        ArithExpr::Var(i, _) => x[*i],
        ArithExpr::Add(a, b) => arith(a, x) + arith(b, x),
        ArithExpr::Sub(a, b) => arith(a, x) - arith(b, x),
        ArithExpr::Mul(a, b) => arith(a, x) * arith(b, x),
        ArithExpr::Abs(a) => arith(a, x).abs(),
        ArithExpr::Neg(a) => -arith(a, x),
    }
}

/// Robustness at `t` straight from the recursive definition, with the last
/// sample held past the end of the signal.
///
/// Under the hold every position at or after the last sample sees the same
/// constant suffix, so a window's positions past `n - 1` all share the value
/// at `n - 1` and only the first of them is visited.
pub fn oracle(f: &Formula<f64>, s: &[Vec<f64>], t: usize) -> f64 {
    let last = s.len() - 1;
    let clip = |a: usize, b: usize| -> Vec<usize> {
        if a >= last {
            vec![last]
        } else {
            (a..=b.min(last)).collect()
        }
    };
    match f {
        Formula::True => f64::INFINITY,
        Formula::Pred(p) => {
            let v = arith(&p.expr, &s[t.min(last)]);
            match p.cmp {
                Cmp::Gt | Cmp::Ge => v,
                Cmp::Lt | Cmp::Le => -v,
                other => panic!("no robustness for {other:?}"),
            }
        }
        Formula::Not(g) => -oracle(g, s, t),
        Formula::And(a, b) => oracle(a, s, t).min(oracle(b, s, t)),
        Formula::Or(a, b) => oracle(a, s, t).max(oracle(b, s, t)),
        Formula::Eventually(i, g) => clip(t + i.a, t + i.b)
            .into_iter()
            .map(|u| oracle(g, s, u))
            .fold(f64::NEG_INFINITY, f64::max),
        Formula::Always(i, g) => clip(t + i.a, t + i.b)
            .into_iter()
            .map(|u| oracle(g, s, u))
            .fold(f64::INFINITY, f64::min),
        Formula::Until(i, l, r) => clip(t + i.a, t + i.b)
            .into_iter()
            .map(|u| {
                let lhs = clip(t, u)
                    .into_iter()
                    .map(|v| oracle(l, s, v))
                    .fold(f64::INFINITY, f64::min);
                oracle(r, s, u).min(lhs)
            })
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

fn leaf() -> impl Strategy<Value = String> {
    let c = (-40i32..=40).prop_map(|v| format!("{:.1}", f64::from(v) / 10.0));
    (0usize..6, c).prop_map(|(k, c)| match k {
        0 => format!("x > {c}"),
        1 => format!("y < {c}"),
        2 => format!("x + y >= {c}"),
        3 => format!("abs(x) < {c}"),
        4 => format!("2 * x - y <= {c}"),
        _ => format!("abs(y - x) > {c}"),
    })
}

fn window() -> impl Strategy<Value = (usize, usize)> {
    (0usize..4, 0usize..4).prop_map(|(a, d)| (a, a + d))
}

/// Formula text over variables `x` and `y`, fully parenthesized.
pub fn formula_text() -> impl Strategy<Value = String> {
    leaf().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| format!("not ({f})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) and ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) or ({b})")),
            (window(), inner.clone()).prop_map(|((a, b), f)| format!("ev_[{a},{b}] ({f})")),
            (window(), inner.clone()).prop_map(|((a, b), f)| format!("alw_[{a},{b}] ({f})")),
            (window(), inner.clone(), inner)
                .prop_map(|((a, b), l, r)| format!("({l}) until_[{a},{b}] ({r})")),
        ]
    })
}

/// Deterministic stream of values drawn from a strategy.
pub struct Draw {
    runner: TestRunner,
}

impl Draw {
    pub fn new(seed: u64) -> Self {
        let mut bytes = [0u8; 32];
        bytes[..8].copy_from_slice(&seed.to_le_bytes());
        let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &bytes);
        Self {
            runner: TestRunner::new_with_rng(Config::default(), rng),
        }
    }

    pub fn value<S: Strategy>(&mut self, s: &S) -> S::Value {
        s.new_tree(&mut self.runner)
            .expect("strategy yields values")
            .current()
    }
}

/// True when `xs` holds a run of at least `len` consecutive negative values.
pub fn has_negative_run(xs: &[f64], len: usize) -> bool {
    let mut run = 0;
    for &x in xs {
        run = if x < 0.0 { run + 1 } else { 0 };
        if run >= len {
            return true;
        }
    }
    false
}

/// Checks one (formula, prefix) pair against full completions of the
/// prefix: every completion's exact robustness lies in the prefix interval,
/// intervals along the first completion only narrow, the incremental
/// monitor agrees with the stateless one, and intervals collapse to the
/// exact value once the horizon is covered.
pub fn check_interval_case(
    f: &Formula<f64>,
    vars: &rmstl::VarTable,
    prefix_len: usize,
    t: usize,
    completions: &[Vec<Vec<f64>>],
) -> Result<(), String> {
    use rmstl::monitor::{rob_interval, rob_offline, OnlineMonitor};
    use rmstl::Signal;
    let h = f.horizon();
    let sig = |rows: &[Vec<f64>]| Signal::from_samples(vars.clone(), rows.iter().cloned()).unwrap();
    let prefix = sig(&completions[0][..prefix_len]);
    let iv = rob_interval(f, &prefix, t).map_err(|e| e.to_string())?;
    for (k, c) in completions.iter().enumerate() {
        if c.len() <= t + h {
            return Err(format!("completion {k} is shorter than t + horizon"));
        }
        let v = rob_offline(f, &sig(c), t).map_err(|e| e.to_string())?;
        if !(iv.lo <= v && v <= iv.hi) {
            return Err(format!(
                "completion {k}: {v} outside [{}, {}]",
                iv.lo, iv.hi
            ));
        }
    }
    let full = &completions[0];
    let exact = rob_offline(f, &sig(full), t).unwrap();
    let mut online = OnlineMonitor::new(f, vars).unwrap();
    let mut growing = Signal::new(vars.clone());
    let mut prev = rob_interval(f, &growing, t).unwrap();
    if online.interval(&growing, t) != prev {
        return Err("online monitor differs on the empty signal".into());
    }
    for row in full {
        growing.append(row).unwrap();
        let cur = rob_interval(f, &growing, t).unwrap();
        let inc = online.interval(&growing, t);
        if inc != cur {
            return Err(format!(
                "len {}: online {inc:?} vs stateless {cur:?}",
                growing.len()
            ));
        }
        if !(cur.lo >= prev.lo && cur.hi <= prev.hi) {
            return Err(format!(
                "len {}: {prev:?} widened to {cur:?}",
                growing.len()
            ));
        }
        if growing.len() > t + h && !(cur.lo == cur.hi && (cur.lo - exact).abs() <= 1e-9) {
            return Err(format!(
                "len {}: {cur:?} did not collapse to {exact}",
                growing.len()
            ));
        }
        prev = cur;
    }
    Ok(())
}

/// Scripted cart-pole episode in which `x` is negative from step 50 on:
/// seed 23 starts just right of the origin and the tracker heads for
/// region A after 30 steps.
pub fn stuck_episode() -> rmstl::runtime::EpisodeTrace {
    use rmstl::runtime::{policy::CartPoleTracker, run_episode};
    let task = load("cartpole-ab.toml");
    let mut policy = CartPoleTracker::new(vec![-0.6]).with_delay(30);
    run_episode(&task, &mut policy, 23).unwrap()
}

/// Earliest step at which some window start in `[100, 200]` has a complete
/// run of 301 negative samples, read directly off the recorded positions.
pub fn earliest_stuck_confirmation(xs: &[f64]) -> Option<usize> {
    (100..=200usize)
        .filter(|&s| s + 300 < xs.len() && xs[s..=s + 300].iter().all(|&x| x < 0.0))
        .map(|s| s + 300)
        .min()
}

/// Step counts of a cart-pole episode under the region machine: steps
/// before A, steps from entering A until B, steps from entering B. Also
/// reports whether the cart ever left B after entering it.
pub fn region_counts(xs: &[f64]) -> (usize, usize, usize, bool) {
    let in_a = |x: f64| -0.7 < x && x < -0.5;
    let in_b = |x: f64| 0.5 < x && x < 0.7;
    let (mut a, mut b, mut k) = (0, 0, 0);
    let mut stage = 0;
    let mut left_b = false;
    // Rewards are paid on steps 1.., judged on the sample of that step.
    for &x in &xs[1..] {
        if stage == 0 && in_a(x) {
            stage = 1;
        } else if stage == 1 && in_b(x) {
            stage = 2;
        } else if stage == 2 && !in_b(x) {
            left_b = true;
        }
        match stage {
            0 => a += 1,
            1 => b += 1,
            _ => k += 1,
        }
    }
    (a, b, k, left_b)
}
