//! Action choosers for episode runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{gridworld, highway, Env};
use crate::monitor::TruthAssignment;

/// What a policy sees before choosing an action.
#[derive(Debug, Clone, Copy)]
pub struct PolicyView<'a> {
    pub t: usize,
    /// Augmented observation.
    pub obs: &'a [f64],
    pub env_obs: &'a [f64],
    pub states: &'a [usize],
    pub sigma: TruthAssignment,
    /// Scripted policies may read the simulator state directly.
    pub env: &'a Env,
}

pub trait Policy {
    /// Called once before each episode.
    fn begin_episode(&mut self, _seed: u64) {}

    fn act(&mut self, view: &PolicyView<'_>) -> usize;
}

/// Uniform random actions, reseeded per episode from the episode seed.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    actions: usize,
    salt: u64,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(actions: usize, salt: u64) -> Self {
        Self {
            actions,
            salt,
            rng: ChaCha8Rng::seed_from_u64(salt),
        }
    }
}

impl Policy for RandomPolicy {
    fn begin_episode(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ self.salt.rotate_left(32));
    }

    fn act(&mut self, _view: &PolicyView<'_>) -> usize {
        self.rng.gen_range(0..self.actions)
    }
}

/// Follows a shortest key-then-door plan, replanning every step.
#[derive(Debug, Clone, Default)]
pub struct GridPlanner;

impl Policy for GridPlanner {
    fn act(&mut self, view: &PolicyView<'_>) -> usize {
        view.env
            .as_grid()
            .and_then(|g| g.shortest_plan())
            .and_then(|plan| plan.first().copied())
            .unwrap_or(gridworld::DONE)
    }
}

/// Balances the pole while steering the cart to a sequence of positions.
///
/// Pushes right when `kθ·θ + kω·θ̇ + kx·e + kv·ẋ > 0`, where `e` is the
/// distance to the target `x - x*` clipped to `±saturation`. After the last
/// waypoint is reached the cart holds there.
#[derive(Debug, Clone)]
pub struct CartPoleTracker {
    pub waypoints: Vec<f64>,
    /// Distance at which a waypoint counts as reached.
    pub tolerance: f64,
    /// Steps before the first waypoint becomes active; the cart holds its
    /// start position meanwhile.
    pub delay: usize,
    pub gains: [f64; 4],
    pub saturation: f64,
    current: usize,
    home: Option<f64>,
}

impl CartPoleTracker {
    pub const GAINS: [f64; 4] = [1.0, 0.3, 0.4, 0.3];

    pub fn new(waypoints: Vec<f64>) -> Self {
        Self {
            waypoints,
            tolerance: 0.03,
            delay: 0,
            gains: Self::GAINS,
            saturation: 0.3,
            current: 0,
            home: None,
        }
    }

    pub fn with_delay(mut self, delay: usize) -> Self {
        self.delay = delay;
        self
    }

    pub fn target(&self) -> Option<f64> {
        self.waypoints.get(self.current).copied()
    }

    fn force_sign(&self, s: &[f64], target: f64) -> bool {
        let [kt, kw, kx, kv] = self.gains;
        let (x, x_dot, theta, theta_dot) = (s[0], s[1], s[2], s[3]);
        let e = (x - target).clamp(-self.saturation, self.saturation);
        kt * theta + kw * theta_dot + kx * e + kv * x_dot > 0.0
    }
}

impl Policy for CartPoleTracker {
    fn begin_episode(&mut self, _seed: u64) {
        self.current = 0;
        self.home = None;
    }

    fn act(&mut self, view: &PolicyView<'_>) -> usize {
        let s = view.env_obs;
        let home = *self.home.get_or_insert(s[0]);
        let target = if view.t < self.delay {
            home
        } else {
            if let Some(w) = self.target() {
                if (s[0] - w).abs() < self.tolerance && self.current + 1 < self.waypoints.len() {
                    self.current += 1;
                }
            }
            self.target().unwrap_or(home)
        };
        usize::from(self.force_sign(s, target))
    }
}

/// Drives toward a preferred lane at a preferred speed, braking behind
/// close traffic.
#[derive(Debug, Clone)]
pub struct HighwayDriver {
    pub lane: usize,
    pub speed: f64,
    /// Gap in metres below which a lead in the ego lane triggers braking.
    pub brake_gap: f64,
}

impl Policy for HighwayDriver {
    fn act(&mut self, view: &PolicyView<'_>) -> usize {
        let Some(h) = view.env.as_highway() else {
            return highway::IDLE;
        };
        let lane_y = h.lane_center(h.target_lane());
        let blocked = view.env_obs[4..]
            .chunks(4)
            .any(|v| v[1].abs() < 0.05 && v[0] > 0.0 && v[0] * 100.0 < self.brake_gap);
        if blocked {
            return highway::SLOWER;
        }
        if (h.ego_lateral() - lane_y).abs() < 1e-9 && h.target_lane() != self.lane {
            return if h.target_lane() < self.lane {
                highway::LANE_RIGHT
            } else {
                highway::LANE_LEFT
            };
        }
        if h.ego_speed() < self.speed {
            highway::FASTER
        } else if h.ego_speed() > self.speed {
            highway::SLOWER
        } else {
            highway::IDLE
        }
    }
}

/// Names accepted by [`scripted`].
pub const SCRIPTED: [&str; 6] = [
    "shortest-path",
    "cartpole-ab",
    "cartpole-left",
    "cartpole-center",
    "highway-right-fast",
    "highway-left-slow",
];

/// Built-in scripted policy by name, if it fits the environment.
pub fn scripted(name: &str, env_id: &str) -> Option<Box<dyn Policy + Send>> {
    let p: Box<dyn Policy + Send> = match (name, env_id) {
        ("shortest-path", "gridworld") => Box::new(GridPlanner),
        ("cartpole-ab", "cartpole") => Box::new(CartPoleTracker::new(vec![-0.6, 0.6])),
        ("cartpole-left", "cartpole") => Box::new(CartPoleTracker::new(vec![-0.6])),
        ("cartpole-center", "cartpole") => Box::new(CartPoleTracker::new(vec![0.0])),
        ("highway-right-fast", "highway") => Box::new(HighwayDriver {
            lane: 2,
            speed: 35.0,
            brake_gap: 30.0,
        }),
        ("highway-left-slow", "highway") => Box::new(HighwayDriver {
            lane: 0,
            speed: 20.0,
            brake_gap: 30.0,
        }),
        _ => return None,
    };
    Some(p)
}
