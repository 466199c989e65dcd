use rand::Rng;

use super::{check_action, rng, EnvDescriptor, Environment, EpisodeClock, RngSeed, Transition};
use crate::error::Result;
use crate::experience::ActionId;

const GRAVITY: f64 = 9.8;
const CART_MASS: f64 = 1.0;
const POLE_MASS: f64 = 0.1;
const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
const HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = POLE_MASS * HALF_LENGTH;
const FORCE: f64 = 10.0;
const TAU: f64 = 0.02;
pub const THETA_LIMIT: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
pub const X_LIMIT: f64 = 2.4;
const MAX_STEPS: usize = 500;

/// Pole balancing on a cart, integrated with explicit Euler steps.
/// State is (x, x', theta, theta'); action 0 pushes left, 1 pushes right.
#[derive(Clone, Debug)]
pub struct CartPole {
    desc: EnvDescriptor,
    state: [f64; 4],
    clock: EpisodeClock,
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl CartPole {
    pub fn new() -> Self {
        // a failing step can carry the state one Euler step past the limits
        CartPole {
            desc: EnvDescriptor {
                name: "cart-pole",
                state_dim: 4,
                action_count: 2,
                max_steps: MAX_STEPS,
                bounds: vec![
                    (-2.0 * X_LIMIT, 2.0 * X_LIMIT),
                    (f64::NEG_INFINITY, f64::INFINITY),
                    (-2.0 * THETA_LIMIT, 2.0 * THETA_LIMIT),
                    (f64::NEG_INFINITY, f64::INFINITY),
                ],
            },
            state: [0.0; 4],
            clock: EpisodeClock::default(),
        }
    }

    pub fn with_state(state: [f64; 4]) -> Self {
        let mut env = Self::new();
        env.state = state;
        env
    }
}

/// One Euler step of the cart-pole equations of motion.
pub fn dynamics(state: [f64; 4], action: usize) -> [f64; 4] {
    let [x, x_dot, theta, theta_dot] = state;
    let force = if action == 1 { FORCE } else { -FORCE };
    let (sin, cos) = theta.sin_cos();
    let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
    let theta_acc = (GRAVITY * sin - cos * temp)
        / (HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / TOTAL_MASS));
    let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;
    [
        x + TAU * x_dot,
        x_dot + TAU * x_acc,
        theta + TAU * theta_dot,
        theta_dot + TAU * theta_acc,
    ]
}

pub fn failed(state: &[f64]) -> bool {
    state[0].abs() > X_LIMIT || state[2].abs() > THETA_LIMIT
}

impl Environment for CartPole {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.desc
    }

    fn reset(&mut self, seed: RngSeed) -> Vec<f64> {
        let mut rng = rng(seed);
        for v in &mut self.state {
            *v = rng.random_range(-0.05..=0.05);
        }
        self.clock.restart();
        self.state()
    }

    fn step(&mut self, action: ActionId) -> Result<Transition> {
        check_action(&self.desc, action)?;
        self.clock.ensure_running()?;
        let state = self.state();
        self.state = dynamics(self.state, action.0);
        let fell = failed(&self.state);
        let (done, truncated) = self.clock.tick(fell, self.desc.max_steps);
        Ok(Transition {
            state,
            action,
            reward: if fell { 0.0 } else { 1.0 },
            next_state: self.state(),
            done,
            truncated,
        })
    }

    fn state(&self) -> Vec<f64> {
        self.state.to_vec()
    }
}
