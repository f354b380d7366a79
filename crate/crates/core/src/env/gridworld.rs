//! Two-room key-and-door task on a square grid.
//!
//! The grid has an outer wall and a vertical wall splitting it in two, with
//! a locked door in the dividing wall. The agent and the key start in the
//! left room. Opening the door while holding the key ends the episode with
//! reward `1 - 0.9 * n / n_max`, where `n` counts steps including the final
//! one. Reaching `n_max = 8 * size²` steps without success truncates with
//! reward 0.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvError, Environment, StepResult};

pub const ACTIONS: [&str; 7] = [
    "left", "right", "forward", "pickup", "drop", "toggle", "done",
];
pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const FORWARD: usize = 2;
pub const PICKUP: usize = 3;
pub const DROP: usize = 4;
pub const TOGGLE: usize = 5;
pub const DONE: usize = 6;

/// Facing direction; `East` is +x and `South` is +y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Heading {
    East,
    South,
    West,
    North,
}

impl Heading {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        [Heading::East, Heading::South, Heading::West, Heading::North][i % 4]
    }

    fn delta(self) -> (i64, i64) {
        match self {
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
            Heading::North => (0, -1),
        }
    }

    fn turn_left(self) -> Self {
        Self::from_index(self.index() + 3)
    }

    fn turn_right(self) -> Self {
        Self::from_index(self.index() + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub size: usize,
    /// Fixes door, key, and start cell across episodes when set; otherwise
    /// they are drawn from each episode's seed.
    pub layout_seed: Option<u64>,
    /// Redraws the start pose every episode even with a fixed layout.
    pub random_start: bool,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            size: 6,
            layout_seed: None,
            random_start: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridworldUnlock {
    params: GridParams,
    wall_x: usize,
    door: (usize, usize),
    key: (usize, usize),
    agent: (usize, usize),
    heading: Heading,
    has_key: bool,
    open_door: bool,
    steps: usize,
    done: bool,
}

impl GridworldUnlock {
    pub fn new(params: GridParams) -> Self {
        assert!(params.size >= 5, "grid size must be at least 5");
        let mut g = Self {
            params,
            wall_x: params.size / 2,
            door: (0, 0),
            key: (0, 0),
            agent: (0, 0),
            heading: Heading::East,
            has_key: false,
            open_door: false,
            steps: 0,
            done: false,
        };
        g.reset(0);
        g
    }

    pub fn size(&self) -> usize {
        self.params.size
    }

    /// Step budget `8 * size²`.
    pub fn max_steps(&self) -> usize {
        8 * self.params.size * self.params.size
    }

    pub fn agent(&self) -> (usize, usize, Heading) {
        (self.agent.0, self.agent.1, self.heading)
    }

    pub fn door(&self) -> (usize, usize) {
        self.door
    }

    pub fn key(&self) -> Option<(usize, usize)> {
        (!self.has_key).then_some(self.key)
    }

    pub fn has_key(&self) -> bool {
        self.has_key
    }

    pub fn door_open(&self) -> bool {
        self.open_door
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Success reward after `n` steps.
    pub fn success_reward(&self, n: usize) -> f64 {
        1.0 - 0.9 * (n as f64 / self.max_steps() as f64)
    }

    fn left_room_cells(&self) -> Vec<(usize, usize)> {
        let n = self.params.size;
        (1..n - 1)
            .flat_map(|y| (1..self.wall_x).map(move |x| (x, y)))
            .collect()
    }

    fn draw_layout(&mut self, rng: &mut ChaCha8Rng) {
        let n = self.params.size;
        self.door = (self.wall_x, rng.gen_range(1..n - 1));
        let cells = self.left_room_cells();
        self.key = cells[rng.gen_range(0..cells.len())];
    }

    fn draw_start(&mut self, rng: &mut ChaCha8Rng) {
        let cells: Vec<_> = self
            .left_room_cells()
            .into_iter()
            .filter(|&c| c != self.key)
            .collect();
        self.agent = cells[rng.gen_range(0..cells.len())];
        self.heading = Heading::from_index(rng.gen_range(0..4));
    }

    fn is_wall(&self, (x, y): (usize, usize)) -> bool {
        let n = self.params.size;
        x == 0 || y == 0 || x == n - 1 || y == n - 1 || (x == self.wall_x && (x, y) != self.door)
    }

    fn passable(&self, cell: (usize, usize)) -> bool {
        !self.is_wall(cell)
            && !(cell == self.door && !self.open_door)
            && !(!self.has_key && cell == self.key)
    }

    fn front(&self) -> (usize, usize) {
        let (dx, dy) = self.heading.delta();
        (
            (self.agent.0 as i64 + dx) as usize,
            (self.agent.1 as i64 + dy) as usize,
        )
    }

    fn observe(&self) -> Vec<f64> {
        vec![
            self.agent.0 as f64,
            self.agent.1 as f64,
            self.heading.index() as f64,
        ]
    }

    /// Shortest action sequence from the current state to opening the door,
    /// found by breadth-first search over (cell, heading, has_key).
    pub fn shortest_plan(&self) -> Option<Vec<usize>> {
        type State = ((usize, usize), Heading, bool);
        let start: State = (self.agent, self.heading, self.has_key);
        let mut parent: HashMap<State, (State, usize)> = HashMap::new();
        let mut queue = VecDeque::from([start]);
        let mut seen = std::collections::HashSet::from([start]);
        while let Some(state) = queue.pop_front() {
            let (pos, heading, has_key) = state;
            let (dx, dy) = heading.delta();
            let front = ((pos.0 as i64 + dx) as usize, (pos.1 as i64 + dy) as usize);
            if has_key && front == self.door {
                let mut plan = vec![TOGGLE];
                let mut cur = state;
                while let Some(&(prev, action)) = parent.get(&cur) {
                    plan.push(action);
                    cur = prev;
                }
                plan.reverse();
                return Some(plan);
            }
            let mut next = vec![
                ((pos, heading.turn_left(), has_key), LEFT),
                ((pos, heading.turn_right(), has_key), RIGHT),
            ];
            let key_present = !has_key;
            let blocked =
                self.is_wall(front) || front == self.door || (key_present && front == self.key);
            if !blocked {
                next.push(((front, heading, has_key), FORWARD));
            }
            if key_present && front == self.key {
                next.push(((pos, heading, true), PICKUP));
            }
            for (s, a) in next {
                if seen.insert(s) {
                    parent.insert(s, (state, a));
                    queue.push_back(s);
                }
            }
        }
        None
    }
}

impl Environment for GridworldUnlock {
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut episode_rng = ChaCha8Rng::seed_from_u64(seed);
        match self.params.layout_seed {
            Some(layout) => {
                let mut layout_rng = ChaCha8Rng::seed_from_u64(layout);
                self.draw_layout(&mut layout_rng);
                if self.params.random_start {
                    self.draw_start(&mut episode_rng);
                } else {
                    self.draw_start(&mut layout_rng);
                }
            }
            None => {
                self.draw_layout(&mut episode_rng);
                self.draw_start(&mut episode_rng);
            }
        }
        self.has_key = false;
        self.open_door = false;
        self.steps = 0;
        self.done = false;
        self.observe()
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterTerminal);
        }
        if action >= ACTIONS.len() {
            return Err(EnvError::InvalidAction {
                action,
                count: ACTIONS.len(),
            });
        }
        self.steps += 1;
        let mut reward = 0.0;
        let mut terminated = false;
        let front = self.front();
        match action {
            LEFT => self.heading = self.heading.turn_left(),
            RIGHT => self.heading = self.heading.turn_right(),
            FORWARD => {
                if self.passable(front) {
                    self.agent = front;
                }
            }
            PICKUP => {
                if !self.has_key && front == self.key {
                    self.has_key = true;
                }
            }
            TOGGLE => {
                if front == self.door && self.has_key && !self.open_door {
                    self.open_door = true;
                    terminated = true;
                    reward = self.success_reward(self.steps);
                }
            }
            // The key cannot be put back, so holding it is monotone.
            DROP | DONE => {}
            _ => unreachable!(),
        }
        let truncated = !terminated && self.steps >= self.max_steps();
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
        ["x", "y", "dir"].map(String::from).to_vec()
    }

    fn label_names(&self) -> Vec<String> {
        ["has_key", "open_door"].map(String::from).to_vec()
    }

    fn labels(&self) -> Vec<f64> {
        vec![
            if self.has_key { 1.0 } else { 0.0 },
            if self.open_door { 1.0 } else { 0.0 },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(size: usize, layout: u64) -> GridworldUnlock {
        GridworldUnlock::new(GridParams {
            size,
            layout_seed: Some(layout),
            random_start: true,
        })
    }

    #[test]
    fn success_reward_formula() {
        let g = grid(6, 0);
        assert_eq!(g.max_steps(), 288);
        assert!((g.success_reward(16) - 0.95).abs() < 1e-12);
    }

    #[test]
    fn start_state_labels() {
        let mut g = grid(6, 1);
        g.reset(3);
        assert_eq!(g.labels(), vec![0.0, 0.0]);
    }

    #[test]
    fn scripted_plan_opens_door() {
        let mut g = grid(6, 2);
        g.reset(7);
        let plan = g.shortest_plan().unwrap();
        let mut last = None;
        for (i, &a) in plan.iter().enumerate() {
            let r = g.step(a).unwrap();
            if a == PICKUP {
                assert_eq!(g.labels(), vec![1.0, 0.0]);
            }
            if i + 1 < plan.len() {
                assert!(!r.terminated && !r.truncated);
            }
            last = Some(r);
        }
        let last = last.unwrap();
        assert!(last.terminated);
        assert_eq!(g.labels(), vec![1.0, 1.0]);
        assert_eq!(last.reward, g.success_reward(plan.len()));
        assert_eq!(g.step(DONE), Err(EnvError::StepAfterTerminal));
    }

    #[test]
    fn toggle_without_key_keeps_door_closed() {
        let mut g = grid(6, 4);
        g.reset(0);
        // Walk the plan up to the pickup, then head for the door without it.
        g.agent = (g.wall_x - 1, g.door.1);
        g.heading = Heading::East;
        if g.key == g.agent {
            g.key = (1, 1);
        }
        let r = g.step(TOGGLE).unwrap();
        assert_eq!(r.reward, 0.0);
        assert!(!r.terminated);
        assert!(!g.door_open());
    }

    #[test]
    fn timeout_truncates_with_zero_reward() {
        let mut g = grid(6, 0);
        g.reset(0);
        for i in 1..=g.max_steps() {
            let r = g.step(DONE).unwrap();
            assert_eq!(r.reward, 0.0);
            assert_eq!(r.truncated, i == g.max_steps());
        }
        assert_eq!(g.step(DONE), Err(EnvError::StepAfterTerminal));
    }

    #[test]
    fn drop_keeps_key() {
        let mut g = grid(7, 5);
        g.reset(1);
        let plan = g.shortest_plan().unwrap();
        for &a in plan.iter().take_while(|&&a| a != PICKUP) {
            g.step(a).unwrap();
        }
        g.step(PICKUP).unwrap();
        g.step(DROP).unwrap();
        assert!(g.has_key());
    }
}
