use rand::Rng;

use crate::env::{rng, EnvKind, Environment, EpisodeSeeds, RngSeed};
use crate::error::{Error, Result};
use crate::experience::ActionId;
use crate::policy::Policy;

/// Action values over a rectangular discretization of the state space.
///
/// Dimension `d` is cut at `edges[d]`, giving `edges[d].len() + 1` bins; a
/// value equal to an edge falls in the bin above it.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    edges: Vec<Vec<f64>>,
    action_count: usize,
    values: Vec<f64>,
}

impl QTable {
    /// All-zero table.
    pub fn new(edges: Vec<Vec<f64>>, action_count: usize) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::Contract("grid needs at least one dimension".into()));
        }
        if action_count == 0 {
            return Err(Error::Contract("action count must be positive".into()));
        }
        for e in &edges {
            if e.iter().any(|v| !v.is_finite()) || e.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Contract(
                    "bin edges must be finite and increasing".into(),
                ));
            }
        }
        let cells: usize = edges.iter().map(|e| e.len() + 1).product();
        Ok(QTable {
            edges,
            action_count,
            values: vec![0.0; cells * action_count],
        })
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn cell_count(&self) -> usize {
        self.values.len() / self.action_count
    }

    pub fn cell(&self, state: &[f64]) -> Result<usize> {
        if state.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: state.len(),
            });
        }
        Ok(self.edges.iter().zip(state).fold(0, |acc, (e, &v)| {
            acc * (e.len() + 1) + e.partition_point(|&x| x <= v)
        }))
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        &self.values[cell * self.action_count..(cell + 1) * self.action_count]
    }

    fn row_mut(&mut self, cell: usize) -> &mut [f64] {
        &mut self.values[cell * self.action_count..(cell + 1) * self.action_count]
    }

    /// Applies `f` to every stored value.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        QTable {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn greedy(&self, state: &[f64]) -> Result<ActionId> {
        Ok(ActionId(argmax(self.row(self.cell(state)?))))
    }
}

/// First index of the largest value.
fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = a;
        }
    }
    best
}

impl Policy for QTable {
    fn act(&self, state: &[f64]) -> Result<ActionId> {
        self.greedy(state)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QLearningConfig {
    pub episodes: usize,
    pub alpha: f64,
    pub gamma: f64,
    /// Exploration rate of the first episode, decayed linearly to
    /// `epsilon_end` at the last one.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub seed: RngSeed,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        QLearningConfig {
            episodes: 20_000,
            alpha: 0.1,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            seed: 0,
        }
    }
}

impl QLearningConfig {
    fn epsilon(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            return self.epsilon_start;
        }
        let t = episode as f64 / (self.episodes - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }

    fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Contract(format!(
                "alpha {} outside (0, 1]",
                self.alpha
            )));
        }
        if !unit(self.gamma) {
            return Err(Error::Contract(format!(
                "gamma {} outside [0, 1]",
                self.gamma
            )));
        }
        if !unit(self.epsilon_start) || !unit(self.epsilon_end) {
            return Err(Error::Contract("epsilon outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// A trained table and the undiscounted return of every training episode.
#[derive(Clone, Debug)]
pub struct Training {
    pub table: QTable,
    pub returns: Vec<f64>,
}

/// One-step Q-learning with epsilon-greedy exploration.
///
/// Truncated episodes bootstrap from the last state; terminal ones do not.
pub fn train_q_teacher(
    env: &mut dyn Environment,
    edges: Vec<Vec<f64>>,
    config: &QLearningConfig,
) -> Result<Training> {
    config.validate()?;
    let desc = env.descriptor().clone();
    if edges.len() != desc.state_dim {
        return Err(Error::Dimension {
            expected: desc.state_dim,
            got: edges.len(),
        });
    }
    let mut table = QTable::new(edges, desc.action_count)?;
    let mut seeds = EpisodeSeeds::new(config.seed);
    let mut explore = rng(seeds.next().expect("endless"));
    let mut returns = Vec::with_capacity(config.episodes);

    for episode in 0..config.episodes {
        let epsilon = config.epsilon(episode);
        let mut cell = table.cell(&env.reset(seeds.next().expect("endless")))?;
        let mut total = 0.0;
        loop {
            let action = if explore.random::<f64>() < epsilon {
                explore.random_range(0..desc.action_count)
            } else {
                argmax(table.row(cell))
            };
            let t = env.step(ActionId(action))?;
            total += t.reward;
            let next = table.cell(&t.next_state)?;
            let terminal = t.done && !t.truncated;
            let future = if terminal {
                0.0
            } else {
                table
                    .row(next)
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let q = &mut table.row_mut(cell)[action];
            *q += config.alpha * (t.reward + config.gamma * future - *q);
            if !q.is_finite() {
                return Err(Error::Training(format!("Q value {q} in episode {episode}")));
            }
            if t.done {
                break;
            }
            cell = next;
        }
        returns.push(total);
    }
    Ok(Training { table, returns })
}

/// `bins` equal-width bins over `[lo, hi]`, open at both ends.
fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (1..bins)
        .map(|k| lo + (hi - lo) * k as f64 / bins as f64)
        .collect()
}

/// A discretization that suits each built-in environment.
pub fn default_grid(env: EnvKind) -> Vec<Vec<f64>> {
    match env {
        // one bin per relative offset
        EnvKind::PredatorPrey => vec![uniform_edges(-19.5, 19.5, 39); 2],
        EnvKind::MountainCar => vec![uniform_edges(-1.2, 0.6, 24), uniform_edges(-0.07, 0.07, 24)],
        EnvKind::CartPole => vec![
            vec![-0.8, 0.8],
            vec![-0.5, 0.5],
            uniform_edges(-0.21, 0.21, 8),
            uniform_edges(-1.5, 1.5, 8),
        ],
        EnvKind::FlappyBird => vec![
            vec![5.0, 10.0, 20.0],
            uniform_edges(-24.0, 24.0, 24),
            uniform_edges(-8.0, 8.0, 8),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvKind, PredatorPrey};

    #[test]
    fn cells_follow_edges() {
        let t = QTable::new(vec![vec![0.0, 1.0], vec![5.0]], 2).unwrap();
        assert_eq!(t.cell_count(), 6);
        assert_eq!(t.cell(&[-1.0, 0.0]).unwrap(), 0);
        assert_eq!(t.cell(&[0.0, 0.0]).unwrap(), 2);
        assert_eq!(t.cell(&[0.5, 5.0]).unwrap(), 3);
        assert_eq!(t.cell(&[9.0, 9.0]).unwrap(), 5);
        assert!(t.cell(&[0.0]).is_err());
        assert!(QTable::new(vec![vec![1.0, 1.0]], 2).is_err());
    }

    #[test]
    fn predator_prey_grid_has_one_cell_per_offset() {
        let t = QTable::new(default_grid(EnvKind::PredatorPrey), 4).unwrap();
        let mut seen = std::collections::HashSet::new();
        for x in -19..=19 {
            for y in -19..=19 {
                assert!(seen.insert(t.cell(&[x as f64, y as f64]).unwrap()));
            }
        }
    }

    #[test]
    fn zero_episodes_pick_the_first_action() {
        let mut env = PredatorPrey::new();
        let config = QLearningConfig {
            episodes: 0,
            ..Default::default()
        };
        let trained =
            train_q_teacher(&mut env, default_grid(EnvKind::PredatorPrey), &config).unwrap();
        assert!(trained.returns.is_empty());
        for s in [[3.0, -2.0], [-5.0, 1.0], [0.0, 7.0]] {
            assert_eq!(trained.table.act(&s).unwrap(), ActionId(0));
        }
    }

    #[test]
    fn myopic_learner_steps_onto_an_adjacent_prey() {
        // with gamma = 0 each value estimates the immediate reward, and only
        // moving right can catch a prey one cell to the right
        let mut env = PredatorPrey::new();
        let config = QLearningConfig {
            episodes: 3000,
            gamma: 0.0,
            epsilon_end: 1.0,
            seed: 4,
            ..Default::default()
        };
        let trained =
            train_q_teacher(&mut env, default_grid(EnvKind::PredatorPrey), &config).unwrap();
        assert_eq!(trained.table.act(&[1.0, 0.0]).unwrap(), ActionId(3));
        assert_eq!(trained.table.act(&[0.0, 1.0]).unwrap(), ActionId(0));
    }

    #[test]
    fn greedy_choice_survives_positive_affine_maps() {
        let mut env = PredatorPrey::new();
        let config = QLearningConfig {
            episodes: 300,
            seed: 2,
            ..Default::default()
        };
        let t = train_q_teacher(&mut env, default_grid(EnvKind::PredatorPrey), &config)
            .unwrap()
            .table;
        for (scale, shift) in [(2.0, 0.0), (0.5, -3.0), (7.0, 100.0)] {
            let u = t.map_values(|v| scale * v + shift);
            for x in -19..=19 {
                for y in -19..=19 {
                    let s = [x as f64, y as f64];
                    assert_eq!(t.act(&s).unwrap(), u.act(&s).unwrap());
                }
            }
        }
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn invalid_configuration_is_rejected() {
        let mut env = PredatorPrey::new();
        let mut grid = default_grid(EnvKind::PredatorPrey);
        grid[0] = vec![0.0];
        let bad = QLearningConfig {
            alpha: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            train_q_teacher(&mut env, grid.clone(), &bad),
            Err(Error::Contract(_))
        ));
        grid.pop();
        assert!(matches!(
            train_q_teacher(&mut env, grid, &QLearningConfig::default()),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn training_is_seeded() {
        let config = QLearningConfig {
            episodes: 50,
            seed: 9,
            ..Default::default()
        };
        let run = || {
            train_q_teacher(
                &mut PredatorPrey::new(),
                default_grid(EnvKind::PredatorPrey),
                &config,
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.returns, b.returns);
        assert_eq!(a.table, b.table);
    }
}
