//! Flat `key=value` configuration for experiment suites.
//!
//! Blank lines and lines starting with `#` are ignored. List values are
//! comma separated. Keys that are absent keep their defaults.

use std::fmt;
use std::str::FromStr;

use crate::env::{EnvKind, RngSeed};
use crate::error::{Error, Result};
use crate::nearest::Backend;
use crate::teachers::QLearningConfig;
use crate::tree::Criterion;

#[derive(Clone, Debug, PartialEq)]
pub enum TeacherSpec {
    Scripted,
    QLearn {
        episodes: usize,
        alpha: f64,
        gamma: f64,
    },
    External(String),
}

impl TeacherSpec {
    pub fn q_learning(&self, seed: RngSeed) -> Option<QLearningConfig> {
        match *self {
            TeacherSpec::QLearn {
                episodes,
                alpha,
                gamma,
            } => Some(QLearningConfig {
                episodes,
                alpha,
                gamma,
                seed,
                ..QLearningConfig::default()
            }),
            _ => None,
        }
    }
}

/// One column of the model axis in a suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelSpec {
    Teacher,
    /// Nearest neighbour over the whole deduplicated pool, for comparison
    /// with the condensed students.
    FullNearest,
    Nearest(Backend),
    Tree {
        criterion: Criterion,
        depth: usize,
    },
}

impl ModelSpec {
    pub fn defaults() -> Vec<ModelSpec> {
        let mut out = vec![ModelSpec::Teacher, ModelSpec::FullNearest];
        out.extend(Backend::ALL.map(ModelSpec::Nearest));
        for criterion in [Criterion::Entropy, Criterion::Gini] {
            for depth in [5, 10] {
                out.push(ModelSpec::Tree { criterion, depth });
            }
        }
        out
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Teacher => f.write_str("teacher"),
            ModelSpec::FullNearest => f.write_str("nn_full"),
            ModelSpec::Nearest(b) => f.write_str(b.name()),
            ModelSpec::Tree { criterion, depth } => write!(f, "dt_{criterion}_l{depth}"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "teacher" => return Ok(ModelSpec::Teacher),
            "nn_full" => return Ok(ModelSpec::FullNearest),
            _ => {}
        }
        if let Ok(b) = s.parse::<Backend>() {
            return Ok(ModelSpec::Nearest(b));
        }
        let tree = s.strip_prefix("dt_").and_then(|rest| {
            let (c, d) = rest.split_once("_l")?;
            let depth = d.parse().ok().filter(|&d| d >= 1)?;
            Some(ModelSpec::Tree {
                criterion: c.parse().ok()?,
                depth,
            })
        });
        tree.ok_or_else(|| Error::Name(format!("model `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub envs: Vec<EnvKind>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<RngSeed>,
    pub episodes: usize,
    pub teacher: TeacherSpec,
    pub models: Vec<ModelSpec>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            envs: EnvKind::ALL.to_vec(),
            sizes: vec![500, 1000, 3000, 5000, 10_000, 50_000],
            seeds: vec![0],
            episodes: 200,
            teacher: TeacherSpec::Scripted,
            models: ModelSpec::defaults(),
        }
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    let items = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::format(line, format!("bad `{key}` entry `{s}`")))
        })
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(Error::format(
            line,
            format!("`{key}` needs at least one entry"),
        ));
    }
    Ok(items)
}

fn scalar<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::format(line, format!("bad `{key}` value `{}`", value.trim())))
}

impl SuiteConfig {
    /// Canonical text form; parsing it gives back the same config.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "envs={}\nsizes={}\nseeds={}\nepisodes={}\n",
            join(&self.envs),
            join(&self.sizes),
            join(&self.seeds),
            self.episodes
        );
        match &self.teacher {
            TeacherSpec::Scripted => out.push_str("teacher=scripted\n"),
            TeacherSpec::QLearn {
                episodes,
                alpha,
                gamma,
            } => out.push_str(&format!(
                "teacher=qlearn\nqlearn_episodes={episodes}\nqlearn_alpha={alpha}\nqlearn_gamma={gamma}\n"
            )),
            TeacherSpec::External(cmd) => {
                out.push_str(&format!("teacher=external\nteacher_command={cmd}\n"))
            }
        }
        out.push_str(&format!("models={}\n", join(&self.models)));
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = SuiteConfig::default();
        let mut teacher = "scripted".to_string();
        let mut command = None;
        let q = QLearningConfig::default();
        let (mut q_episodes, mut alpha, mut gamma) = (q.episodes, q.alpha, q.gamma);
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| Error::format(line, "expected key=value"))?;
            let key = key.trim();
            match key {
                "envs" => config.envs = list(line, key, value)?,
                "sizes" => config.sizes = list(line, key, value)?,
                "seeds" => config.seeds = list(line, key, value)?,
                "episodes" => config.episodes = scalar(line, key, value)?,
                "models" => config.models = list(line, key, value)?,
                "teacher" => teacher = value.trim().to_string(),
                "teacher_command" => command = Some(value.trim().to_string()),
                "qlearn_episodes" => q_episodes = scalar(line, key, value)?,
                "qlearn_alpha" => alpha = scalar(line, key, value)?,
                "qlearn_gamma" => gamma = scalar(line, key, value)?,
                other => return Err(Error::format(line, format!("unknown key `{other}`"))),
            }
        }
        config.teacher =
            match teacher.as_str() {
                "scripted" => TeacherSpec::Scripted,
                "qlearn" => TeacherSpec::QLearn {
                    episodes: q_episodes,
                    alpha,
                    gamma,
                },
                "external" => TeacherSpec::External(command.ok_or_else(|| {
                    Error::Contract("teacher=external needs teacher_command".into())
                })?),
                other => return Err(Error::Name(format!("teacher `{other}`"))),
            };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Contract("episodes must be positive".into()));
        }
        if self.sizes.contains(&0) {
            return Err(Error::Contract("pool sizes must be positive".into()));
        }
        if self.envs.is_empty()
            || self.sizes.is_empty()
            || self.seeds.is_empty()
            || self.models.is_empty()
        {
            return Err(Error::Contract(
                "every list needs at least one entry".into(),
            ));
        }
        Ok(())
    }
}
