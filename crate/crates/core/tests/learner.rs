mod common;

use std::collections::HashMap;

use common::load;
use rmstl::learner::{
    coarse_bins_warning, evaluate_policy, train, ConfigError, LearnerConfig, QPolicy, QTable,
};

fn cfg(episodes: usize, seed: u64) -> LearnerConfig {
    LearnerConfig {
        episodes,
        seed,
        ..Default::default()
    }
}

#[test]
fn same_seed_same_curve() {
    let task = load("gridworld-6.toml");
    let a = train(&task, &cfg(200, 5)).unwrap();
    let b = train(&task, &cfg(200, 5)).unwrap();
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.q, b.q);
    let c = train(&task, &cfg(200, 6)).unwrap();
    assert_ne!(a.curve, c.curve);
}

#[test]
fn values_stay_within_the_discounted_reward_bound() {
    for name in ["gridworld-6.toml", "cartpole-ab.toml"] {
        let task = load(name);
        let c = cfg(150, 1);
        let out = train(&task, &c).unwrap();
        let r_max = task
            .machines
            .iter()
            .flat_map(|m| m.transitions.iter())
            .map(|t| match t.reward {
                rmstl::rm::RewardSpec::Constant(v) => v.abs(),
                rmstl::rm::RewardSpec::EnvPassthrough => 1.0,
            })
            .fold(0.0, f64::max)
            * task.machines.len() as f64;
        let bound = r_max / (1.0 - c.gamma);
        for (_, q) in out.q.iter() {
            assert!(
                q.iter().all(|v| v.is_finite() && v.abs() <= bound + 1e-9),
                "{name}"
            );
        }
    }
}

#[test]
fn greedy_action_depends_on_machine_state() {
    let task = load("gridworld-6.toml");
    let out = train(&task, &cfg(1500, 0)).unwrap();
    // Group keys by the grid cell and heading; the last key entry is the
    // key/door machine state.
    let mut by_pose: HashMap<Vec<i64>, Vec<(i64, usize)>> = HashMap::new();
    for (key, _) in out.q.iter() {
        let (pose, u) = key.split_at(key.len() - 1);
        by_pose
            .entry(pose.to_vec())
            .or_default()
            .push((u[0], out.q.greedy(key)));
    }
    let differing = by_pose
        .values()
        .filter(|v| v.iter().any(|&(_, a)| a != v[0].1))
        .count();
    assert!(
        differing > 0,
        "no pose whose greedy action changes with the machine state"
    );
}

#[test]
fn snapshot_round_trip() {
    let task = load("highway.toml");
    let out = train(&task, &cfg(30, 2)).unwrap();
    let mut buf = Vec::new();
    out.q
        .write_snapshot(&task, &out.discretizer, &mut buf)
        .unwrap();
    let (disc, q) = QTable::read_snapshot(&task, buf.as_slice()).unwrap();
    assert_eq!(disc, out.discretizer);
    assert_eq!(q, out.q);

    let other = load("cartpole-ab.toml");
    assert!(QTable::read_snapshot(&other, buf.as_slice()).is_err());
}

#[test]
fn trained_policy_is_deterministic_under_evaluation() {
    let task = load("gridworld-6.toml");
    let out = train(&task, &cfg(300, 3)).unwrap();
    let mut p = QPolicy {
        q: out.q,
        discretizer: out.discretizer,
    };
    let a = evaluate_policy(&task, &mut p, 5).unwrap();
    let b = evaluate_policy(&task, &mut p, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_problems_are_reported() {
    let task = load("cartpole-ab.toml");
    let bad = LearnerConfig::from_toml_str("[bins]\nspeed = { lo = 0, hi = 1, n = 2 }").unwrap();
    assert_eq!(
        train(&task, &bad).unwrap_err(),
        ConfigError::UnknownComponent("speed".into())
    );
    let bad =
        LearnerConfig::from_toml_str("demo_policy = \"shortest-path\"\ndemo_episodes = 3").unwrap();
    assert!(matches!(
        train(&task, &bad),
        Err(ConfigError::UnknownPolicy { .. })
    ));
    assert!(LearnerConfig::from_toml_str("[bins]\nx = { lo = 1, hi = 0, n = 2 }").is_err());

    let default = LearnerConfig::default();
    assert!(coarse_bins_warning(&task, &default.discretizer(&task).unwrap()).is_some());
    let fine = LearnerConfig::load(common::spec_path("cartpole-guidance.learn.toml")).unwrap();
    assert!(coarse_bins_warning(&task, &fine.discretizer(&task).unwrap()).is_none());
}

#[test]
fn demonstrations_drive_the_first_episodes() {
    let task = load("cartpole-ab.toml");
    let c = LearnerConfig::from_toml_str(
        "episodes = 3\ndemo_policy = \"cartpole-ab\"\ndemo_episodes = 3\ndemo_epsilon = 0.0",
    )
    .unwrap();
    let out = train(&task, &c).unwrap();
    // The scripted controller balances for the whole episode.
    assert!(out.curve.iter().all(|r| r.length == 500), "{:?}", out.curve);
}
