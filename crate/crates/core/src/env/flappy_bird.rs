use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_action, rng, EnvDescriptor, Environment, EpisodeClock, RngSeed, Transition};
use crate::error::Result;
use crate::experience::ActionId;

pub const GRAVITY: f64 = 1.0;
pub const FLAP_VELOCITY: f64 = 4.0;
pub const MAX_SPEED: f64 = 8.0;
pub const PIPE_SPACING: i64 = 30;
pub const GAP_HALF_HEIGHT: f64 = 6.0;
pub const GAP_RANGE: f64 = 20.0;
pub const WORLD_HALF_HEIGHT: f64 = 40.0;
const MAX_STEPS: usize = 1000;

/// A simplified, grid-free Flappy Bird.
///
/// The bird moves one unit right per tick. Each tick its height changes by
/// the current velocity, after which the velocity is set to +4 on a flap or
/// reduced by 1 otherwise, clamped to [-8, 8]. Pipes stand every 30 units;
/// the bird must be within 6 units of the gap centre when it reaches one.
/// State is (distance to next pipe, height above its gap centre, velocity).
#[derive(Clone, Debug)]
pub struct FlappyBird {
    desc: EnvDescriptor,
    x: i64,
    y: f64,
    velocity: f64,
    pipe_x: i64,
    gap: f64,
    rng: ChaCha8Rng,
    clock: EpisodeClock,
}

impl Default for FlappyBird {
    fn default() -> Self {
        Self::new()
    }
}

impl FlappyBird {
    pub fn new() -> Self {
        let reach = WORLD_HALF_HEIGHT + GAP_RANGE;
        FlappyBird {
            desc: EnvDescriptor {
                name: "flappy-bird",
                state_dim: 3,
                action_count: 2,
                max_steps: MAX_STEPS,
                bounds: vec![
                    (0.0, PIPE_SPACING as f64),
                    (-reach - MAX_SPEED, reach + MAX_SPEED),
                    (-MAX_SPEED, MAX_SPEED),
                ],
            },
            x: 0,
            y: 0.0,
            velocity: 0.0,
            pipe_x: PIPE_SPACING,
            gap: 0.0,
            rng: rng(0),
            clock: EpisodeClock::default(),
        }
    }

    /// Bird at height `y` with `velocity`, `distance` units before a pipe
    /// whose gap is centred at `gap`.
    pub fn with_state(distance: i64, y: f64, velocity: f64, gap: f64, seed: RngSeed) -> Self {
        let mut env = Self::new();
        env.rng = rng(seed);
        env.pipe_x = distance;
        env.y = y;
        env.velocity = velocity;
        env.gap = gap;
        env
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    fn draw_gap(&mut self) -> f64 {
        self.rng.random_range(-GAP_RANGE..=GAP_RANGE)
    }
}

impl Environment for FlappyBird {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.desc
    }

    fn reset(&mut self, seed: RngSeed) -> Vec<f64> {
        self.rng = rng(seed);
        self.x = 0;
        self.y = 0.0;
        self.velocity = 0.0;
        self.pipe_x = PIPE_SPACING;
        self.gap = self.draw_gap();
        self.clock.restart();
        self.state()
    }

    fn step(&mut self, action: ActionId) -> Result<Transition> {
        check_action(&self.desc, action)?;
        self.clock.ensure_running()?;
        let state = self.state();

        self.y += self.velocity;
        self.velocity = if action.0 == 1 {
            FLAP_VELOCITY
        } else {
            self.velocity - GRAVITY
        }
        .clamp(-MAX_SPEED, MAX_SPEED);
        self.x += 1;

        let mut reward = 0.0;
        let mut crashed = self.y.abs() > WORLD_HALF_HEIGHT;
        if !crashed && self.x == self.pipe_x {
            if (self.y - self.gap).abs() <= GAP_HALF_HEIGHT {
                reward = 1.0;
                self.pipe_x += PIPE_SPACING;
                self.gap = self.draw_gap();
            } else {
                crashed = true;
            }
        }
        let (done, truncated) = self.clock.tick(crashed, self.desc.max_steps);
        Ok(Transition {
            state,
            action,
            reward,
            next_state: self.state(),
            done,
            truncated,
        })
    }

    fn state(&self) -> Vec<f64> {
        vec![
            (self.pipe_x - self.x) as f64,
            self.y - self.gap,
            self.velocity,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaving_the_world_ends_the_episode() {
        let mut env = FlappyBird::with_state(20, 39.0, 4.0, 0.0, 0);
        let t = env.step(ActionId(0)).unwrap();
        assert!(t.done && !t.truncated);
        let mut env = FlappyBird::with_state(20, -38.0, -3.0, 0.0, 0);
        assert!(env.step(ActionId(1)).unwrap().done);
    }

    #[test]
    fn flap_resets_velocity() {
        let mut env = FlappyBird::with_state(20, 0.0, -8.0, 0.0, 0);
        env.step(ActionId(1)).unwrap();
        assert_eq!(env.velocity(), 4.0);
        env.step(ActionId(0)).unwrap();
        assert_eq!(env.velocity(), 3.0);
        let mut env = FlappyBird::with_state(20, 0.0, -8.0, 0.0, 0);
        env.step(ActionId(0)).unwrap();
        assert_eq!(env.velocity(), -8.0);
    }

    #[test]
    fn passing_through_the_gap_scores() {
        // one unit before a pipe centred at 5, bird at 3 falling by 1
        let mut env = FlappyBird::with_state(1, 3.0, -1.0, 5.0, 0);
        let t = env.step(ActionId(0)).unwrap();
        assert_eq!(t.state, vec![1.0, -2.0, -1.0]);
        assert_eq!(t.reward, 1.0);
        assert!(!t.done);
        assert_eq!(t.next_state[0], PIPE_SPACING as f64);
    }

    #[test]
    fn hitting_the_pipe_crashes() {
        let mut env = FlappyBird::with_state(1, 12.0, 0.0, 5.0, 0);
        let t = env.step(ActionId(0)).unwrap();
        assert_eq!(t.reward, 0.0);
        assert!(t.done);
    }
}
