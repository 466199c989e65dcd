use rand::Rng;

use super::{check_action, rng, EnvDescriptor, Environment, EpisodeClock, RngSeed, Transition};
use crate::error::Result;
use crate::experience::ActionId;

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.5;
const FORCE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;
const MAX_STEPS: usize = 200;

/// The classic under-powered car in a valley. State is (position, velocity);
/// actions push left, coast, or push right.
#[derive(Clone, Debug)]
pub struct MountainCar {
    desc: EnvDescriptor,
    position: f64,
    velocity: f64,
    clock: EpisodeClock,
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new()
    }
}

impl MountainCar {
    pub fn new() -> Self {
        MountainCar {
            desc: EnvDescriptor {
                name: "mountain-car",
                state_dim: 2,
                action_count: 3,
                max_steps: MAX_STEPS,
                bounds: vec![(MIN_POSITION, MAX_POSITION), (-MAX_SPEED, MAX_SPEED)],
            },
            position: -0.5,
            velocity: 0.0,
            clock: EpisodeClock::default(),
        }
    }

    pub fn with_state(position: f64, velocity: f64) -> Self {
        let mut env = Self::new();
        env.position = position;
        env.velocity = velocity;
        env
    }
}

/// One application of the update rule; `(position, velocity)` out.
pub fn dynamics(position: f64, velocity: f64, action: usize) -> (f64, f64) {
    let mut velocity = velocity + (action as f64 - 1.0) * FORCE - GRAVITY * (3.0 * position).cos();
    velocity = velocity.clamp(-MAX_SPEED, MAX_SPEED);
    let position = (position + velocity).clamp(MIN_POSITION, MAX_POSITION);
    if position == MIN_POSITION && velocity < 0.0 {
        velocity = 0.0;
    }
    (position, velocity)
}

impl Environment for MountainCar {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.desc
    }

    fn reset(&mut self, seed: RngSeed) -> Vec<f64> {
        self.position = rng(seed).random_range(-0.6..=-0.4);
        self.velocity = 0.0;
        self.clock.restart();
        self.state()
    }

    fn step(&mut self, action: ActionId) -> Result<Transition> {
        check_action(&self.desc, action)?;
        self.clock.ensure_running()?;
        let state = self.state();
        (self.position, self.velocity) = dynamics(self.position, self.velocity, action.0);
        let goal = self.position >= GOAL_POSITION;
        let (done, truncated) = self.clock.tick(goal, self.desc.max_steps);
        Ok(Transition {
            state,
            action,
            reward: -1.0,
            next_state: self.state(),
            done,
            truncated,
        })
    }

    fn state(&self) -> Vec<f64> {
        vec![self.position, self.velocity]
    }
}
