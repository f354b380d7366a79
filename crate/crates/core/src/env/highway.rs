//! Kinematic multi-lane highway with constant-speed traffic.
//!
//! Positions along the road are in metres and speeds in m/s. Lateral
//! position is normalized so the road spans `[0, 1]` and lane `k` of `L` is
//! centred at `(k + 0.5) / L`, with lane 0 leftmost. The observation lists
//! the ego vehicle followed by four slots for the closest vehicles ahead:
//!
//! - ego: `x_ego = s / 1000`, `y_ego`, `vx_ego` (m/s), `vy_ego` (per step)
//! - slot `i`: `x{i} = Δs / 100`, `y{i} = Δy`, `vx{i}` (relative m/s), `vy{i}`
//!
//! Empty slots read `(10, 10, 0, 0)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvError, Environment, StepResult};

pub const ACTIONS: [&str; 5] = ["lane_left", "idle", "lane_right", "faster", "slower"];
pub const LANE_LEFT: usize = 0;
pub const IDLE: usize = 1;
pub const LANE_RIGHT: usize = 2;
pub const FASTER: usize = 3;
pub const SLOWER: usize = 4;

pub const SLOTS: usize = 4;
const EMPTY_SLOT: [f64; 4] = [10.0, 10.0, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighwayParams {
    pub lanes: usize,
    pub vehicles: usize,
    /// Episode length in steps.
    pub duration: usize,
    pub speed_min: f64,
    pub speed_max: f64,
    pub speed_step: f64,
    pub initial_speed: f64,
    /// Seconds per step.
    pub dt: f64,
    /// Longitudinal gap below which two vehicles in one lane collide.
    pub collision_gap: f64,
    pub traffic_speed: (f64, f64),
}

impl Default for HighwayParams {
    fn default() -> Self {
        Self {
            lanes: 3,
            vehicles: 6,
            duration: 150,
            speed_min: 15.0,
            speed_max: 40.0,
            speed_step: 5.0,
            initial_speed: 25.0,
            dt: 1.0,
            collision_gap: 5.0,
            traffic_speed: (18.0, 26.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    /// Distance along the road.
    pub s: f64,
    pub lane: usize,
    pub speed: f64,
}

#[derive(Debug, Clone)]
pub struct HighwayLite {
    params: HighwayParams,
    rng: ChaCha8Rng,
    ego_s: f64,
    ego_y: f64,
    ego_vy: f64,
    ego_speed: f64,
    target_lane: usize,
    traffic: Vec<Vehicle>,
    steps: usize,
    crashed: bool,
    done: bool,
}

impl HighwayLite {
    pub fn new(params: HighwayParams) -> Self {
        assert!(params.lanes >= 1, "highway needs at least one lane");
        let mut h = Self {
            params,
            rng: ChaCha8Rng::seed_from_u64(0),
            ego_s: 0.0,
            ego_y: 0.0,
            ego_vy: 0.0,
            ego_speed: params.initial_speed,
            target_lane: 0,
            traffic: Vec::new(),
            steps: 0,
            crashed: false,
            done: false,
        };
        h.reset(0);
        h
    }

    pub fn params(&self) -> &HighwayParams {
        &self.params
    }

    pub fn lane_center(&self, lane: usize) -> f64 {
        (lane as f64 + 0.5) / self.params.lanes as f64
    }

    fn lane_width(&self) -> f64 {
        1.0 / self.params.lanes as f64
    }

    pub fn ego_speed(&self) -> f64 {
        self.ego_speed
    }

    pub fn ego_lateral(&self) -> f64 {
        self.ego_y
    }

    pub fn target_lane(&self) -> usize {
        self.target_lane
    }

    pub fn crashed(&self) -> bool {
        self.crashed
    }

    pub fn traffic(&self) -> &[Vehicle] {
        &self.traffic
    }

    /// Replaces the surrounding traffic, for scripted scenarios.
    pub fn set_traffic(&mut self, traffic: Vec<Vehicle>) {
        self.traffic = traffic;
    }

    /// Places the ego vehicle at the centre of `lane`.
    pub fn place_ego(&mut self, lane: usize, speed: f64) {
        self.target_lane = lane.min(self.params.lanes - 1);
        self.ego_y = self.lane_center(self.target_lane);
        self.ego_vy = 0.0;
        self.ego_speed = speed.clamp(self.params.speed_min, self.params.speed_max);
    }

    fn spawn(&mut self, ahead_from: f64, ahead_to: f64) -> Vehicle {
        let (lo, hi) = self.params.traffic_speed;
        loop {
            let v = Vehicle {
                s: self.ego_s + self.rng.gen_range(ahead_from..ahead_to),
                lane: self.rng.gen_range(0..self.params.lanes),
                speed: self.rng.gen_range(lo..hi),
            };
            let clear = self
                .traffic
                .iter()
                .all(|o| o.lane != v.lane || (o.s - v.s).abs() > 3.0 * self.params.collision_gap);
            if clear {
                return v;
            }
        }
    }

    fn lateral_gap(&self, v: &Vehicle) -> f64 {
        self.lane_center(v.lane) - self.ego_y
    }

    /// Overlap at the end of the step, or passing through each other
    /// during it, while laterally overlapping.
    fn collides(&self, v: &Vehicle, gap_before: f64) -> bool {
        let gap = v.s - self.ego_s;
        let longitudinal =
            gap.abs() < self.params.collision_gap || gap.signum() != gap_before.signum();
        longitudinal && self.lateral_gap(v).abs() < 0.6 * self.lane_width()
    }

    fn observe(&self) -> Vec<f64> {
        let mut obs = vec![self.ego_s / 1000.0, self.ego_y, self.ego_speed, self.ego_vy];
        let mut ahead: Vec<&Vehicle> = self
            .traffic
            .iter()
            .filter(|v| v.s - self.ego_s >= -self.params.collision_gap)
            .collect();
        ahead.sort_by(|a, b| {
            (a.s - self.ego_s)
                .abs()
                .total_cmp(&(b.s - self.ego_s).abs())
        });
        for slot in 0..SLOTS {
            match ahead.get(slot) {
                Some(v) => obs.extend([
                    (v.s - self.ego_s) / 100.0,
                    self.lateral_gap(v),
                    v.speed - self.ego_speed,
                    0.0,
                ]),
                None => obs.extend(EMPTY_SLOT),
            }
        }
        obs
    }
}

impl Environment for HighwayLite {
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.ego_s = 0.0;
        let lane = self.rng.gen_range(0..self.params.lanes);
        self.place_ego(lane, self.params.initial_speed);
        self.traffic.clear();
        for _ in 0..self.params.vehicles {
            let v = self.spawn(20.0, 250.0);
            self.traffic.push(v);
        }
        self.steps = 0;
        self.crashed = false;
        self.done = false;
        self.observe()
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterTerminal);
        }
        let p = self.params;
        match action {
            LANE_LEFT => self.target_lane = self.target_lane.saturating_sub(1),
            LANE_RIGHT => self.target_lane = (self.target_lane + 1).min(p.lanes - 1),
            FASTER => self.ego_speed = (self.ego_speed + p.speed_step).min(p.speed_max),
            SLOWER => self.ego_speed = (self.ego_speed - p.speed_step).max(p.speed_min),
            IDLE => {}
            _ => {
                return Err(EnvError::InvalidAction {
                    action,
                    count: ACTIONS.len(),
                })
            }
        }
        // A lane change takes three steps.
        let max_dy = self.lane_width() / 3.0;
        let dy = (self.lane_center(self.target_lane) - self.ego_y).clamp(-max_dy, max_dy);
        let y = self.ego_y + dy;
        // Snap to the centre to keep repeated thirds from drifting.
        self.ego_y = if (y - self.lane_center(self.target_lane)).abs() < 1e-9 {
            self.lane_center(self.target_lane)
        } else {
            y
        };
        self.ego_vy = dy;
        let gaps_before: Vec<f64> = self.traffic.iter().map(|v| v.s - self.ego_s).collect();
        self.ego_s += self.ego_speed * p.dt;
        for v in &mut self.traffic {
            v.s += v.speed * p.dt;
        }
        self.crashed = self
            .traffic
            .iter()
            .zip(&gaps_before)
            .any(|(v, &g)| self.collides(v, g));
        for i in 0..self.traffic.len() {
            if self.traffic[i].s - self.ego_s < -30.0 {
                let fresh = self.spawn(150.0, 250.0);
                self.traffic[i] = fresh;
            }
        }
        self.steps += 1;
        let reward = if self.crashed {
            -1.0
        } else {
            ((self.ego_speed - 20.0) / 20.0).clamp(0.0, 1.0)
        };
        let terminated = self.crashed;
        let truncated = !terminated && self.steps >= p.duration;
        self.done = terminated || truncated;
        Ok(StepResult {
            obs: self.observe(),
            reward,
            terminated,
            truncated,
        })
    }

    fn action_names(&self) -> &'static [&'static str] {
        &ACTIONS
    }

    fn observation_names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["x_ego", "y_ego", "vx_ego", "vy_ego"]
            .map(String::from)
            .to_vec();
        for i in 1..=SLOTS {
            names.extend(["x", "y", "vx", "vy"].map(|p| format!("{p}{i}")));
        }
        names
    }

    fn label_names(&self) -> Vec<String> {
        self.observation_names()
    }

    fn labels(&self) -> Vec<f64> {
        self.observe()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_road() -> HighwayLite {
        let mut h = HighwayLite::new(HighwayParams::default());
        h.set_traffic(Vec::new());
        h.place_ego(1, 25.0);
        h
    }

    #[test]
    fn faster_increments_to_cap() {
        let mut h = empty_road();
        let speeds: Vec<f64> = (0..5).map(|_| h.step(FASTER).unwrap().obs[2]).collect();
        assert_eq!(speeds, vec![30.0, 35.0, 40.0, 40.0, 40.0]);
    }

    #[test]
    fn lane_change_reaches_right_lane() {
        let mut h = empty_road();
        h.step(LANE_RIGHT).unwrap();
        h.step(IDLE).unwrap();
        let obs = h.step(IDLE).unwrap().obs;
        assert_eq!(obs[1], h.lane_center(2));
        assert!(obs[1] > 0.6);
    }

    #[test]
    fn empty_slots_are_far() {
        let h = empty_road();
        let obs = h.labels();
        assert_eq!(obs.len(), 4 + 4 * SLOTS);
        assert_eq!(&obs[4..8], &EMPTY_SLOT);
    }

    #[test]
    fn close_lead_is_reported_first() {
        let mut h = empty_road();
        let s = 0.0;
        h.ego_s = s;
        h.set_traffic(vec![
            Vehicle {
                s: s + 60.0,
                lane: 0,
                speed: 20.0,
            },
            Vehicle {
                s: s + 5.0,
                lane: 1,
                speed: 25.0,
            },
        ]);
        let obs = h.labels();
        assert!((obs[4] - 0.05).abs() < 1e-12);
        assert_eq!(obs[5], 0.0);
        assert!((obs[8] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn rear_end_collision_terminates() {
        let mut h = empty_road();
        h.set_traffic(vec![Vehicle {
            s: 20.0,
            lane: 1,
            speed: 15.0,
        }]);
        h.place_ego(1, 40.0);
        let r = h.step(IDLE).unwrap();
        assert!(r.terminated);
        assert_eq!(r.reward, -1.0);
        assert_eq!(h.step(IDLE), Err(EnvError::StepAfterTerminal));
    }

    #[test]
    fn same_seed_same_trajectory() {
        let run = |seed| {
            let mut h = HighwayLite::new(HighwayParams::default());
            let mut obs = vec![h.reset(seed)];
            for i in 0..100 {
                match h.step(i % 5) {
                    Ok(r) => obs.push(r.obs),
                    Err(_) => break,
                }
            }
            obs
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
    }
}
