//! Teacher policies and experience collection.
//!
//! Three kinds of teacher are available: a fixed expert per environment
//! ([`ScriptedTeacher`]), a greedy policy over a learned Q-table
//! ([`QTable`]), and a child process answering queries over a line
//! protocol ([`ExternalTeacher`]).

mod external;
mod qlearn;

pub use external::ExternalTeacher;
pub use qlearn::{default_grid, train_q_teacher, QLearningConfig, QTable, Training};

use crate::env::{EnvKind, Environment, EpisodeSeeds, RngSeed};
use crate::error::{Error, Result};
use crate::experience::{ActionId, ExperiencePool};
use crate::policy::Policy;

/// Hand-written expert for one environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScriptedTeacher(pub EnvKind);

pub fn scripted_teacher(env: &str) -> Result<ScriptedTeacher> {
    Ok(ScriptedTeacher(env.parse()?))
}

impl ScriptedTeacher {
    fn decide(self, s: &[f64]) -> usize {
        match self.0 {
            // chase along the axis with the larger gap, x first on ties
            EnvKind::PredatorPrey => {
                let (dx, dy) = (s[0], s[1]);
                if dx.abs() >= dy.abs() {
                    if dx < 0.0 {
                        2
                    } else {
                        3
                    }
                } else if dy > 0.0 {
                    0
                } else {
                    1
                }
            }
            EnvKind::MountainCar => {
                if s[1] > 0.0 {
                    2
                } else {
                    0
                }
            }
            EnvKind::CartPole => usize::from(s[2] + 0.5 * s[3] > 0.0),
            EnvKind::FlappyBird => usize::from(s[1] < 0.0 && s[2] < 2.0),
        }
    }
}

impl Policy for ScriptedTeacher {
    fn act(&self, state: &[f64]) -> Result<ActionId> {
        let dim = self.0.descriptor().state_dim;
        if state.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: state.len(),
            });
        }
        Ok(ActionId(self.decide(state)))
    }
}

/// A collected pool together with the number of pairs recorded before
/// duplicates were dropped.
#[derive(Clone, Debug)]
pub struct Collection {
    pub pool: ExperiencePool,
    pub raw: usize,
}

/// Runs `policy` in `env` until exactly `n` (state, action) pairs have been
/// recorded, then deduplicates them. Episode `k` is reset with the `k`-th
/// seed derived from `seed`.
pub fn collect<P: Policy + ?Sized>(
    env: &mut dyn Environment,
    policy: &P,
    n: usize,
    seed: RngSeed,
) -> Result<Collection> {
    if n == 0 {
        return Err(Error::Contract("cannot collect zero experiences".into()));
    }
    let desc = env.descriptor().clone();
    let mut raw = ExperiencePool::new(desc.state_dim, desc.action_count)?;
    let mut seeds = EpisodeSeeds::new(seed);
    'episodes: for episode_seed in &mut seeds {
        let mut state = env.reset(episode_seed);
        loop {
            let action = policy.act(&state)?;
            raw.push(&state, action)?;
            if raw.len() == n {
                break 'episodes;
            }
            let t = env.step(action)?;
            if t.done {
                break;
            }
            state = t.next_state;
        }
    }
    Ok(Collection {
        pool: raw.dedupe(),
        raw: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(env: EnvKind, s: &[f64]) -> usize {
        ScriptedTeacher(env).act(s).unwrap().0
    }

    #[test]
    fn scripted_rules() {
        assert_eq!(act(EnvKind::PredatorPrey, &[3.0, -2.0]), 3);
        assert_eq!(act(EnvKind::PredatorPrey, &[-3.0, 3.0]), 2);
        assert_eq!(act(EnvKind::PredatorPrey, &[1.0, 4.0]), 0);
        assert_eq!(act(EnvKind::PredatorPrey, &[0.0, -4.0]), 1);
        assert_eq!(act(EnvKind::MountainCar, &[-0.5, 0.01]), 2);
        assert_eq!(act(EnvKind::MountainCar, &[-0.5, 0.0]), 0);
        assert_eq!(act(EnvKind::MountainCar, &[-0.5, -0.01]), 0);
        assert_eq!(act(EnvKind::CartPole, &[0.0, 0.0, 0.1, 0.0]), 1);
        assert_eq!(act(EnvKind::CartPole, &[0.0, 0.0, 0.1, -0.3]), 0);
        assert_eq!(act(EnvKind::FlappyBird, &[10.0, -1.0, 0.0]), 1);
        assert_eq!(act(EnvKind::FlappyBird, &[10.0, -1.0, 2.0]), 0);
        assert_eq!(act(EnvKind::FlappyBird, &[10.0, 1.0, -5.0]), 0);
    }

    #[test]
    fn unknown_environment() {
        assert!(matches!(scripted_teacher("pong"), Err(Error::Name(_))));
        assert!(ScriptedTeacher(EnvKind::CartPole).act(&[0.0; 2]).is_err());
    }

    #[test]
    fn collect_counts_and_determinism() {
        for kind in EnvKind::ALL {
            let teacher = ScriptedTeacher(kind);
            let mut env = kind.make();
            let a = collect(env.as_mut(), &teacher, 700, 3).unwrap();
            let b = collect(env.as_mut(), &teacher, 700, 3).unwrap();
            assert_eq!(a.raw, 700);
            assert!(a.pool.len() <= 700 && !a.pool.is_empty());
            assert_eq!(a.pool.to_text(), b.pool.to_text());
            // every recorded action is what the teacher says in that state
            for (s, action) in a.pool.iter() {
                assert_eq!(teacher.act(s).unwrap(), action);
            }
        }
        let mut env = EnvKind::MountainCar.make();
        let one = collect(env.as_mut(), &ScriptedTeacher(EnvKind::MountainCar), 1, 0).unwrap();
        assert_eq!(one.pool.len(), 1);
        assert!(collect(env.as_mut(), &ScriptedTeacher(EnvKind::MountainCar), 0, 0).is_err());
    }

    #[test]
    fn predator_prey_experience_piles_up_near_the_origin() {
        let mut env = EnvKind::PredatorPrey.make();
        let c = collect(
            env.as_mut(),
            &ScriptedTeacher(EnvKind::PredatorPrey),
            3000,
            1,
        )
        .unwrap();
        // raw pairs, not deduped: visits within 2 cells of the prey
        let mut env = EnvKind::PredatorPrey.make();
        let mut near = 0;
        let mut total = 0;
        let mut seeds = EpisodeSeeds::new(1);
        let teacher = ScriptedTeacher(EnvKind::PredatorPrey);
        while total < 3000 {
            let mut s = env.reset(seeds.next().unwrap());
            loop {
                total += 1;
                if s[0].abs() + s[1].abs() <= 2.0 {
                    near += 1;
                }
                let t = env.step(teacher.act(&s).unwrap()).unwrap();
                if t.done || total == 3000 {
                    break;
                }
                s = t.next_state;
            }
        }
        // the 12 cells within distance 2 are under 1% of the 1520 possible offsets
        assert!(near as f64 / total as f64 > 0.2, "{near}/{total}");
        assert!(c.pool.len() < 3000);
    }
}
