//! Seeded simulation environments with a shared reset/step interface.
//!
//! Each environment owns its random stream, seeded at [`Environment::reset`].
//! The same seed and the same action sequence always reproduce the same
//! transitions.

mod cart_pole;
mod flappy_bird;
mod mountain_car;
mod predator_prey;

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use cart_pole::CartPole;
pub use flappy_bird::FlappyBird;
pub use mountain_car::MountainCar;
pub use predator_prey::{PredatorPrey, PreyMove};

use crate::error::{Error, Result};
use crate::experience::ActionId;

pub type RngSeed = u64;

#[derive(Clone, Debug, PartialEq)]
pub struct EnvDescriptor {
    pub name: &'static str,
    pub state_dim: usize,
    pub action_count: usize,
    pub max_steps: usize,
    /// Inclusive range every emitted state component stays within.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: ActionId,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// Terminal or truncated.
    pub done: bool,
    /// The episode hit its step cap rather than a terminal state.
    pub truncated: bool,
}

pub trait Environment: Send {
    fn descriptor(&self) -> &EnvDescriptor;

    /// Starts a new episode and returns its first state.
    fn reset(&mut self, seed: RngSeed) -> Vec<f64>;

    fn step(&mut self, action: ActionId) -> Result<Transition>;

    fn state(&self) -> Vec<f64>;
}

pub(crate) fn check_action(desc: &EnvDescriptor, action: ActionId) -> Result<()> {
    if action.0 < desc.action_count {
        Ok(())
    } else {
        Err(Error::Action {
            action: action.0,
            count: desc.action_count,
        })
    }
}

/// Step bookkeeping shared by every environment.
#[derive(Clone, Debug, Default)]
pub(crate) struct EpisodeClock {
    steps: usize,
    finished: bool,
}

impl EpisodeClock {
    pub fn restart(&mut self) {
        *self = EpisodeClock::default();
    }

    pub fn ensure_running(&self) -> Result<()> {
        if self.finished {
            Err(Error::Contract("episode finished; reset first".into()))
        } else {
            Ok(())
        }
    }

    /// Advances one step; returns `(done, truncated)`.
    pub fn tick(&mut self, terminal: bool, max_steps: usize) -> (bool, bool) {
        self.steps += 1;
        let truncated = !terminal && self.steps >= max_steps;
        self.finished = terminal || truncated;
        (self.finished, truncated)
    }
}

pub(crate) fn rng(seed: RngSeed) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-episode seeds derived from one master seed.
pub struct EpisodeSeeds(ChaCha8Rng);

impl EpisodeSeeds {
    pub fn new(master: RngSeed) -> Self {
        EpisodeSeeds(rng(master))
    }
}

impl Iterator for EpisodeSeeds {
    type Item = RngSeed;

    fn next(&mut self) -> Option<RngSeed> {
        Some(self.0.next_u64())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvKind {
    PredatorPrey,
    MountainCar,
    CartPole,
    FlappyBird,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [
        EnvKind::PredatorPrey,
        EnvKind::MountainCar,
        EnvKind::CartPole,
        EnvKind::FlappyBird,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::PredatorPrey => "predator-prey",
            EnvKind::MountainCar => "mountain-car",
            EnvKind::CartPole => "cart-pole",
            EnvKind::FlappyBird => "flappy-bird",
        }
    }

    pub fn make(self) -> Box<dyn Environment> {
        match self {
            EnvKind::PredatorPrey => Box::new(PredatorPrey::new()),
            EnvKind::MountainCar => Box::new(MountainCar::new()),
            EnvKind::CartPole => Box::new(CartPole::new()),
            EnvKind::FlappyBird => Box::new(FlappyBird::new()),
        }
    }

    pub fn descriptor(self) -> EnvDescriptor {
        self.make().descriptor().clone()
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Name(format!("environment `{s}`")))
    }
}
