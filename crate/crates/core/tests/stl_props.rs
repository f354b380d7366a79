mod common;

use common::{corpus_tasks, formula_text, oracle};
use proptest::prelude::*;
use rmstl::monitor::rob_offline;
use rmstl::stl::parse_formula;
use rmstl::{Formula, Signal, VarTable};

fn xy() -> VarTable {
    VarTable::from_bounds([("x", -5.0, 5.0), ("y", -5.0, 5.0)])
}

fn parse(text: &str) -> Formula {
    parse_formula(text, &xy()).unwrap_or_else(|e| panic!("{text}: {e}"))
}

fn signal_of(rows: Vec<(f64, f64)>) -> Signal {
    Signal::from_samples(xy(), rows.into_iter().map(|(x, y)| vec![x, y])).unwrap()
}

fn rows(min: usize, max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), min..max)
}

#[test]
fn corpus_formulas_round_trip_through_printing() {
    for (name, task) in corpus_tasks() {
        for f in &task.formulas {
            let printed = f.formula.to_string();
            let again = parse_formula(&printed, &task.vars)
                .unwrap_or_else(|e| panic!("{name}/{}: `{printed}`: {e}", f.name));
            assert_eq!(again, f.formula, "{name}/{}", f.name);
        }
    }
}

#[test]
fn table_formula_horizons() {
    let task = common::load("highway.toml");
    let h = |n: &str| task.formula(n).unwrap().formula.horizon();
    assert_eq!(h("mu_fast"), 0);
    assert_eq!(h("phi_tail"), 10);
    assert_eq!(h("phi_fast"), 100);
    let cart = common::load("cartpole-ab.toml");
    assert_eq!(cart.formula("phi_stuck").unwrap().formula.horizon(), 500);
}

#[test]
fn piecewise_constant_lookup_and_clamping() {
    let vars = VarTable::from_bounds([("x", -2.4, 2.4)]);
    let mut s = Signal::new(vars);
    assert_eq!(s.append(&[1.0]).unwrap(), 0);
    assert_eq!(s.append(&[2.0]).unwrap(), 1);
    assert_eq!(s.value("x", 0.0).unwrap(), 1.0);
    assert_eq!(s.value("x", 0.9).unwrap(), 1.0);
    assert_eq!(s.value("x", 1.0).unwrap(), 2.0);
    assert_eq!(s.append(&[3.0]).unwrap(), 2);
    assert_eq!(s.sample(2), &[2.4]);
    assert!(s.was_clamped(2) && !s.was_clamped(1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_formulas_round_trip(text in formula_text()) {
        let f = parse(&text);
        prop_assert_eq!(parse(&f.to_string()), f);
    }

    #[test]
    fn eventually_and_always_are_dual(
        text in formula_text(),
        a in 0usize..4,
        d in 0usize..4,
        samples in rows(1, 30),
    ) {
        let b = a + d;
        let pairs = [
            (format!("ev_[{a},{b}] ({text})"), format!("not (alw_[{a},{b}] (not ({text})))")),
            (format!("alw_[{a},{b}] ({text})"), format!("not (ev_[{a},{b}] (not ({text})))")),
        ];
        let s = signal_of(samples);
        for (lhs, rhs) in pairs {
            let (f, g) = (parse(&lhs), parse(&rhs));
            let h = f.horizon();
            prop_assert_eq!(h, g.horizon());
            for t in 0..s.len().saturating_sub(h) {
                prop_assert_eq!(rob_offline(&f, &s, t).unwrap(), rob_offline(&g, &s, t).unwrap());
            }
            // The desugared tree has the same semantics.
            let ds = f.desugar();
            for t in 0..s.len().saturating_sub(h) {
                prop_assert_eq!(rob_offline(&f, &s, t).unwrap(), rob_offline(&ds, &s, t).unwrap());
            }
        }
    }

    #[test]
    fn samples_past_the_horizon_do_not_matter(
        text in formula_text(),
        t in 0usize..4,
        base in rows(40, 41),
        extra in rows(1, 20),
    ) {
        let f = parse(&text);
        let h = f.horizon();
        let short: Vec<_> = base[..t + h + 1].to_vec();
        let mut long = short.clone();
        long.extend(extra);
        let a = rob_offline(&f, &signal_of(short), t).unwrap();
        let b = rob_offline(&f, &signal_of(long), t).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn offline_matches_recursive_definition(text in formula_text(), samples in rows(1, 25)) {
        let f = parse(&text);
        let s = signal_of(samples);
        for t in 0..s.len().saturating_sub(f.horizon()) {
            let v = rob_offline(&f, &s, t).unwrap();
            prop_assert_eq!(v, oracle(&f, s.samples(), t));
        }
    }
}
