//! Agreement metrics, rollouts, reduction statistics and the experiment
//! suite that ties collection, condensation and model fitting together.
//!
//! MAE and RMSD treat action ids as numbers, so their size depends on how
//! actions happen to be numbered. ACC does not.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::condensation::condense;
use crate::config::{ModelSpec, SuiteConfig, TeacherSpec};
use crate::env::{EnvKind, Environment, EpisodeSeeds, RngSeed};
use crate::error::{Error, Result};
use crate::experience::{ActionId, ExperiencePool, Real};
use crate::nearest::{Backend, NearestBoundaryModel};
use crate::policy::Policy;
use crate::teachers::{collect, default_grid, train_q_teacher, ExternalTeacher, ScriptedTeacher};
use crate::tree::DecisionTreeModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityReport {
    pub mae: f64,
    pub rmsd: f64,
    pub acc: f64,
    pub n_decisions: usize,
}

pub fn similarity_metrics(teacher: &[ActionId], student: &[ActionId]) -> Result<SimilarityReport> {
    if teacher.len() != student.len() {
        return Err(Error::Length {
            left: teacher.len(),
            right: student.len(),
        });
    }
    if teacher.is_empty() {
        return Err(Error::Empty);
    }
    let n = teacher.len() as f64;
    let (mut abs, mut sq, mut hits) = (0.0, 0.0, 0usize);
    for (x, y) in teacher.iter().zip(student) {
        let d = x.0.abs_diff(y.0) as f64;
        abs += d;
        sq += d * d;
        hits += usize::from(x == y);
    }
    let report = SimilarityReport {
        mae: abs / n,
        rmsd: (sq / n).sqrt(),
        acc: hits as f64 / n,
        n_decisions: teacher.len(),
    };
    debug_assert!(report.rmsd >= report.mae * (1.0 - 1e-12));
    Ok(report)
}

/// Similarity over every decision of every episode, plus per-episode
/// reports.
#[derive(Clone, Debug)]
pub struct SimilarityEval {
    pub pooled: SimilarityReport,
    pub episodes: Vec<SimilarityReport>,
}

impl SimilarityEval {
    /// Unweighted mean of the per-episode reports.
    pub fn episode_mean(&self) -> SimilarityReport {
        let n = self.episodes.len() as f64;
        let mean = |f: fn(&SimilarityReport) -> f64| self.episodes.iter().map(f).sum::<f64>() / n;
        SimilarityReport {
            mae: mean(|r| r.mae),
            rmsd: mean(|r| r.rmsd),
            acc: mean(|r| r.acc),
            n_decisions: self.pooled.n_decisions,
        }
    }
}

fn require_episodes(episodes: usize) -> Result<()> {
    if episodes == 0 {
        Err(Error::Contract("at least one episode is required".into()))
    } else {
        Ok(())
    }
}

/// The teacher acts; at each visited state the student is asked too.
pub fn similarity_eval<T, S>(
    teacher: &T,
    student: &S,
    env: &mut dyn Environment,
    episodes: usize,
    seed: RngSeed,
) -> Result<SimilarityEval>
where
    T: Policy + ?Sized,
    S: Policy + ?Sized,
{
    require_episodes(episodes)?;
    let (mut all_t, mut all_s) = (Vec::new(), Vec::new());
    let mut per_episode = Vec::with_capacity(episodes);
    for episode_seed in EpisodeSeeds::new(seed).take(episodes) {
        let (mut ts, mut ss) = (Vec::new(), Vec::new());
        let mut state = env.reset(episode_seed);
        loop {
            let a = teacher.act(&state)?;
            ts.push(a);
            ss.push(student.act(&state)?);
            let t = env.step(a)?;
            if t.done {
                break;
            }
            state = t.next_state;
        }
        per_episode.push(similarity_metrics(&ts, &ss)?);
        all_t.extend(ts);
        all_s.extend(ss);
    }
    Ok(SimilarityEval {
        pooled: similarity_metrics(&all_t, &all_s)?,
        episodes: per_episode,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutSummary {
    pub mean: f64,
    /// Sample standard deviation; zero for a single episode.
    pub std: f64,
    pub returns: Vec<f64>,
}

/// Undiscounted return of `policy` acting alone, episode by episode.
pub fn rollout_return<P: Policy + ?Sized>(
    policy: &P,
    env: &mut dyn Environment,
    episodes: usize,
    seed: RngSeed,
) -> Result<RolloutSummary> {
    require_episodes(episodes)?;
    let mut returns = Vec::with_capacity(episodes);
    for episode_seed in EpisodeSeeds::new(seed).take(episodes) {
        let mut state = env.reset(episode_seed);
        let mut total = 0.0;
        loop {
            let t = env.step(policy.act(&state)?)?;
            total += t.reward;
            if t.done {
                break;
            }
            state = t.next_state;
        }
        returns.push(total);
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let std = if returns.len() > 1 {
        (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(RolloutSummary { mean, std, returns })
}

/// `|after| / |before|`, provided every experience of `after` occurs in
/// `before`.
pub fn reduction_stats(before: &ExperiencePool, after: &ExperiencePool) -> Result<f64> {
    if before.is_empty() {
        return Err(Error::EmptyPool);
    }
    if before.dim() != after.dim() || after.len() > before.len() {
        return Err(Error::Contract("reduced pool is not a subset".into()));
    }
    let known: HashSet<_> = (0..before.len()).map(|i| before.key(i)).collect();
    if let Some(i) = (0..after.len()).find(|&i| !known.contains(&after.key(i))) {
        return Err(Error::Contract(format!(
            "experience {i} of the reduced pool is not in the original"
        )));
    }
    Ok(after.len() as f64 / before.len() as f64)
}

/// One row of a suite report.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteRow {
    pub env: EnvKind,
    pub size: usize,
    pub seed: RngSeed,
    pub outcome: std::result::Result<ModelOutcome, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelOutcome {
    pub model: ModelSpec,
    pub similarity: SimilarityReport,
    /// Share of the deduplicated pool the model keeps; `None` for the
    /// teacher.
    pub retained_fraction: Option<f64>,
    pub mean_return: f64,
    pub return_std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub rows: Vec<SuiteRow>,
}

pub const CSV_HEADER: &str = "env,size,model,mae,rmsd,acc,retained_fraction,mean_return,seed";

impl SuiteReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = match &row.outcome {
                Ok(m) => writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    row.env,
                    row.size,
                    m.model,
                    Real(m.similarity.mae),
                    Real(m.similarity.rmsd),
                    Real(m.similarity.acc),
                    m.retained_fraction
                        .map(|f| Real(f).to_string())
                        .unwrap_or_default(),
                    Real(m.mean_return),
                    row.seed
                ),
                Err(_) => writeln!(out, "{},{},error,,,,,,{}", row.env, row.size, row.seed),
            };
        }
        out
    }

    /// Human-readable table preceded by the configuration that produced it.
    pub fn summary(&self) -> String {
        let mut out = String::from("# configuration\n");
        out.push_str(&self.config.to_text());
        out.push_str("\n# results (mean return +- sample std over episodes)\n");
        let _ = writeln!(
            out,
            "{:<14} {:>6} {:>5} {:<14} {:>7} {:>7} {:>7} {:>8} {:>20}",
            "env", "size", "seed", "model", "mae", "rmsd", "acc", "retained", "return"
        );
        for row in &self.rows {
            let _ = match &row.outcome {
                Ok(m) => writeln!(
                    out,
                    "{:<14} {:>6} {:>5} {:<14} {:>7.4} {:>7.4} {:>7.4} {:>8} {:>20}",
                    row.env.to_string(),
                    row.size,
                    row.seed,
                    m.model.to_string(),
                    m.similarity.mae,
                    m.similarity.rmsd,
                    m.similarity.acc,
                    m.retained_fraction
                        .map(|f| format!("{f:.4}"))
                        .unwrap_or_else(|| "-".into()),
                    format!("{:.2} +- {:.2}", m.mean_return, m.return_std),
                ),
                Err(e) => writeln!(
                    out,
                    "{:<14} {:>6} {:>5} error: {e}",
                    row.env.to_string(),
                    row.size,
                    row.seed
                ),
            };
        }
        out.push_str("\nmae and rmsd depend on action numbering; acc does not.\n");
        out
    }
}

fn make_teacher(spec: &TeacherSpec, env: EnvKind, seed: RngSeed) -> Result<Box<dyn Policy>> {
    Ok(match spec {
        TeacherSpec::Scripted => Box::new(ScriptedTeacher(env)),
        TeacherSpec::QLearn { .. } => {
            let config = spec.q_learning(seed).expect("q-learning spec");
            Box::new(train_q_teacher(env.make().as_mut(), default_grid(env), &config)?.table)
        }
        TeacherSpec::External(cmd) => Box::new(ExternalTeacher::spawn(cmd)?),
    })
}

/// Runs every model of one (env, size, seed) cell. Collection uses the
/// first seed derived from `seed`; every model is then evaluated on the
/// same episodes, seeded by the second.
pub fn run_cell(
    config: &SuiteConfig,
    env: EnvKind,
    size: usize,
    seed: RngSeed,
) -> Result<Vec<ModelOutcome>> {
    let mut seeds = EpisodeSeeds::new(seed);
    let (collect_seed, eval_seed) = (
        seeds.next().expect("endless"),
        seeds.next().expect("endless"),
    );
    let teacher = make_teacher(&config.teacher, env, seed)?;
    let mut sim = env.make();
    let pool = collect(sim.as_mut(), &teacher, size, collect_seed)?.pool;
    let needs_condensed = config
        .models
        .iter()
        .any(|m| matches!(m, ModelSpec::Nearest(_)));
    let condensed = if needs_condensed {
        Some(condense(&pool)?)
    } else {
        None
    };

    let mut out = Vec::with_capacity(config.models.len());
    for &model in &config.models {
        let (student, retained): (Box<dyn Policy>, Option<f64>) = match model {
            ModelSpec::Teacher => (Box::new(&teacher), None),
            ModelSpec::FullNearest => (
                Box::new(NearestBoundaryModel::fit(pool.clone(), Backend::KdTree)?),
                Some(1.0),
            ),
            ModelSpec::Nearest(backend) => {
                let (kept, result) = condensed.as_ref().expect("condensed when needed");
                (
                    Box::new(NearestBoundaryModel::fit(kept.clone(), backend)?),
                    Some(result.retained_fraction()),
                )
            }
            ModelSpec::Tree { criterion, depth } => (
                Box::new(DecisionTreeModel::fit(&pool, criterion, depth)?),
                Some(1.0),
            ),
        };
        let similarity =
            similarity_eval(&teacher, &student, sim.as_mut(), config.episodes, eval_seed)?.pooled;
        let rollout = rollout_return(&student, sim.as_mut(), config.episodes, eval_seed)?;
        out.push(ModelOutcome {
            model,
            similarity,
            retained_fraction: retained,
            mean_return: rollout.mean,
            return_std: rollout.std,
        });
    }
    Ok(out)
}

/// Evaluates every (env, size, seed) cell of the grid in parallel. A cell
/// that fails yields one error row and does not stop the others. Rows are
/// ordered by cell and then by the configured model order.
pub fn run_experiment_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let mut cells = Vec::new();
    for &env in &config.envs {
        for &size in &config.sizes {
            for &seed in &config.seeds {
                cells.push((env, size, seed));
            }
        }
    }
    cells.sort_unstable();
    cells.dedup();
    let rows = cells
        .par_iter()
        .map(
            |&(env, size, seed)| match run_cell(config, env, size, seed) {
                Ok(models) => models
                    .into_iter()
                    .map(|m| SuiteRow {
                        env,
                        size,
                        seed,
                        outcome: Ok(m),
                    })
                    .collect(),
                Err(e) => vec![SuiteRow {
                    env,
                    size,
                    seed,
                    outcome: Err(e.to_string()),
                }],
            },
        )
        .collect::<Vec<Vec<SuiteRow>>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(SuiteReport {
        config: config.clone(),
        rows,
    })
}
