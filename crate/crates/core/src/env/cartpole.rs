//! Classic cart-pole balancing with explicit Euler integration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvError, Environment, StepResult};

pub const ACTIONS: [&str; 2] = ["push_left", "push_right"];
pub const PUSH_LEFT: usize = 0;
pub const PUSH_RIGHT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Half the pole length.
    pub half_length: f64,
    pub force: f64,
    pub dt: f64,
    pub x_limit: f64,
    /// Pole angle limit in radians.
    pub theta_limit: f64,
    pub max_steps: usize,
    /// Half-width of the uniform reset distribution for each component.
    pub reset_spread: f64,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            force: 10.0,
            dt: 0.02,
            x_limit: 2.4,
            theta_limit: 12.0 * 2.0 * std::f64::consts::PI / 360.0,
            max_steps: 500,
            reset_spread: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

#[derive(Debug, Clone)]
pub struct CartPole {
    params: CartPoleParams,
    state: CartPoleState,
    steps: usize,
    done: bool,
}

impl CartPole {
    pub fn new(params: CartPoleParams) -> Self {
        Self {
            params,
            state: CartPoleState::default(),
            steps: 0,
            done: false,
        }
    }

    pub fn params(&self) -> &CartPoleParams {
        &self.params
    }

    pub fn state(&self) -> CartPoleState {
        self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Starts an episode from an explicit state.
    pub fn reset_to(&mut self, state: CartPoleState) -> Vec<f64> {
        self.state = state;
        self.steps = 0;
        self.done = false;
        state.to_vec()
    }

    fn integrate(&mut self, force: f64) {
        let p = &self.params;
        let CartPoleState {
            x,
            x_dot,
            theta,
            theta_dot,
        } = self.state;
        let total_mass = p.cart_mass + p.pole_mass;
        let pole_moment = p.pole_mass * p.half_length;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pole_moment * theta_dot * theta_dot * sin) / total_mass;
        let theta_acc = (p.gravity * sin - cos * temp)
            / (p.half_length * (4.0 / 3.0 - p.pole_mass * cos * cos / total_mass));
        let x_acc = temp - pole_moment * theta_acc * cos / total_mass;
        self.state = CartPoleState {
            x: x + p.dt * x_dot,
            x_dot: x_dot + p.dt * x_acc,
            theta: theta + p.dt * theta_dot,
            theta_dot: theta_dot + p.dt * theta_acc,
        };
    }
}

impl Environment for CartPole {
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = self.params.reset_spread;
        let mut draw = || if w > 0.0 { rng.gen_range(-w..w) } else { 0.0 };
        let state = CartPoleState {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
        };
        self.reset_to(state)
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::StepAfterTerminal);
        }
        let force = match action {
            PUSH_LEFT => -self.params.force,
            PUSH_RIGHT => self.params.force,
            _ => {
                return Err(EnvError::InvalidAction {
                    action,
                    count: ACTIONS.len(),
                })
            }
        };
        self.integrate(force);
        self.steps += 1;
        let s = self.state;
        let terminated = s.x.abs() > self.params.x_limit || s.theta.abs() > self.params.theta_limit;
        // Episodes may last `max_steps` steps; the one after that truncates.
        let truncated = !terminated && self.steps > self.params.max_steps;
        self.done = terminated || truncated;
        Ok(StepResult {
            obs: s.to_vec(),
            reward: 1.0,
            terminated,
            truncated,
        })
    }

    fn action_names(&self) -> &'static [&'static str] {
        &ACTIONS
    }

    fn observation_names(&self) -> Vec<String> {
        ["x", "x_dot", "theta", "theta_dot"]
            .map(String::from)
            .to_vec()
    }

    fn label_names(&self) -> Vec<String> {
        self.observation_names()
    }

    fn labels(&self) -> Vec<f64> {
        self.state.to_vec()
    }
}
