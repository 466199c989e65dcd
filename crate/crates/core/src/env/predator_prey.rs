use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_action, rng, EnvDescriptor, Environment, EpisodeClock, RngSeed, Transition};
use crate::error::Result;
use crate::experience::ActionId;

const SIZE: i64 = 20;
const MAX_STEPS: usize = 200;

/// Displacement of one grid move. Actions 0..4 are up, down, left, right.
fn delta(action: usize) -> (i64, i64) {
    match action {
        0 => (0, 1),
        1 => (0, -1),
        2 => (-1, 0),
        3 => (1, 0),
        _ => (0, 0),
    }
}

fn moved(cell: (i64, i64), (dx, dy): (i64, i64)) -> (i64, i64) {
    (
        (cell.0 + dx).clamp(0, SIZE - 1),
        (cell.1 + dy).clamp(0, SIZE - 1),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreyMove {
    Stay,
    Up,
    Down,
    Left,
    Right,
}

impl PreyMove {
    const ALL: [PreyMove; 5] = [
        PreyMove::Stay,
        PreyMove::Up,
        PreyMove::Down,
        PreyMove::Left,
        PreyMove::Right,
    ];

    fn delta(self) -> (i64, i64) {
        match self {
            PreyMove::Stay => (0, 0),
            PreyMove::Up => delta(0),
            PreyMove::Down => delta(1),
            PreyMove::Left => delta(2),
            PreyMove::Right => delta(3),
        }
    }
}

/// A predator chasing a randomly walking prey on a 20x20 grid with walls.
///
/// The observed state is the prey position minus the predator position.
/// Each step costs -1 until the two share a cell after both have moved; the
/// catching step pays 0 and ends the episode.
#[derive(Clone, Debug)]
pub struct PredatorPrey {
    desc: EnvDescriptor,
    predator: (i64, i64),
    prey: (i64, i64),
    rng: ChaCha8Rng,
    clock: EpisodeClock,
}

impl Default for PredatorPrey {
    fn default() -> Self {
        Self::new()
    }
}

impl PredatorPrey {
    pub fn new() -> Self {
        let reach = (SIZE - 1) as f64;
        PredatorPrey {
            desc: EnvDescriptor {
                name: "predator-prey",
                state_dim: 2,
                action_count: 4,
                max_steps: MAX_STEPS,
                bounds: vec![(-reach, reach); 2],
            },
            predator: (0, 0),
            prey: (1, 0),
            rng: rng(0),
            clock: EpisodeClock::default(),
        }
    }

    /// Places both agents explicitly, e.g. to replay a hand-worked step.
    pub fn with_positions(predator: (i64, i64), prey: (i64, i64), seed: RngSeed) -> Self {
        let mut env = Self::new();
        env.rng = rng(seed);
        env.predator = moved(predator, (0, 0));
        env.prey = moved(prey, (0, 0));
        env
    }

    pub fn positions(&self) -> ((i64, i64), (i64, i64)) {
        (self.predator, self.prey)
    }

    /// One step with the prey's move fixed instead of drawn.
    pub fn step_with_prey(&mut self, action: ActionId, prey_move: PreyMove) -> Result<Transition> {
        check_action(&self.desc, action)?;
        self.clock.ensure_running()?;
        let state = self.state();
        self.predator = moved(self.predator, delta(action.0));
        self.prey = moved(self.prey, prey_move.delta());
        let caught = self.predator == self.prey;
        let (done, truncated) = self.clock.tick(caught, self.desc.max_steps);
        Ok(Transition {
            state,
            action,
            reward: if caught { 0.0 } else { -1.0 },
            next_state: self.state(),
            done,
            truncated,
        })
    }
}

impl Environment for PredatorPrey {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.desc
    }

    fn reset(&mut self, seed: RngSeed) -> Vec<f64> {
        self.rng = rng(seed);
        self.clock.restart();
        let cell = |rng: &mut ChaCha8Rng| (rng.random_range(0..SIZE), rng.random_range(0..SIZE));
        self.predator = cell(&mut self.rng);
        loop {
            self.prey = cell(&mut self.rng);
            if self.prey != self.predator {
                break;
            }
        }
        self.state()
    }

    fn step(&mut self, action: ActionId) -> Result<Transition> {
        check_action(&self.desc, action)?;
        let prey_move = PreyMove::ALL[self.rng.random_range(0..PreyMove::ALL.len())];
        self.step_with_prey(action, prey_move)
    }

    fn state(&self) -> Vec<f64> {
        vec![
            (self.prey.0 - self.predator.0) as f64,
            (self.prey.1 - self.predator.1) as f64,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_worked_steps() {
        // state (3, -2): prey right of and below the predator
        let mut env = PredatorPrey::with_positions((5, 5), (8, 3), 0);
        assert_eq!(env.state(), vec![3.0, -2.0]);
        let t = env.step_with_prey(ActionId(3), PreyMove::Stay).unwrap();
        assert_eq!(t.next_state, vec![2.0, -2.0]);
        assert_eq!((t.reward, t.done), (-1.0, false));

        let mut env = PredatorPrey::with_positions((5, 5), (6, 5), 0);
        let t = env.step_with_prey(ActionId(3), PreyMove::Stay).unwrap();
        assert_eq!(t.next_state, vec![0.0, 0.0]);
        assert_eq!((t.reward, t.done, t.truncated), (0.0, true, false));
    }

    #[test]
    fn catch_is_checked_after_the_prey_moves() {
        let mut env = PredatorPrey::with_positions((5, 5), (6, 5), 0);
        let t = env.step_with_prey(ActionId(3), PreyMove::Right).unwrap();
        assert_eq!(t.next_state, vec![1.0, 0.0]);
        assert!(!t.done);
        // the prey can also walk into the predator
        let mut env = PredatorPrey::with_positions((5, 5), (5, 7), 0);
        let t = env.step_with_prey(ActionId(0), PreyMove::Down).unwrap();
        assert!(t.done);
    }

    #[test]
    fn walls_clamp() {
        let mut env = PredatorPrey::with_positions((0, 0), (19, 19), 0);
        env.step_with_prey(ActionId(2), PreyMove::Up).unwrap();
        assert_eq!(env.positions(), ((0, 0), (19, 19)));
        assert_eq!(env.state(), vec![19.0, 19.0]);
    }

    #[test]
    fn reset_never_starts_caught() {
        let mut env = PredatorPrey::new();
        for seed in 0..2000 {
            let s = env.reset(seed);
            assert_ne!(s, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn prey_moves_at_most_one_cell_on_one_axis() {
        let mut env = PredatorPrey::new();
        env.reset(9);
        for _ in 0..150 {
            let (_, before) = env.positions();
            let t = env.step(ActionId(0)).unwrap();
            let (_, after) = env.positions();
            let d = (after.0 - before.0).abs() + (after.1 - before.1).abs();
            assert!(d <= 1);
            if t.done {
                break;
            }
        }
    }

    #[test]
    fn truncates_at_step_cap() {
        let mut env = PredatorPrey::with_positions((0, 0), (19, 19), 1);
        let mut last = None;
        for _ in 0..MAX_STEPS {
            // run away into the corner; the prey cannot reach it in time
            last = Some(env.step_with_prey(ActionId(1), PreyMove::Stay).unwrap());
        }
        let t = last.unwrap();
        assert!(t.done && t.truncated);
    }
}
