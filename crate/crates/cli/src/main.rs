use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use bcmer::condensation::{condense, CondensationResult};
use bcmer::config::{ModelSpec, SuiteConfig, TeacherSpec};
use bcmer::env::{EnvKind, EpisodeSeeds};
use bcmer::eval::{rollout_return, run_experiment_suite, similarity_eval};
use bcmer::experience::{ActionId, ExperiencePool, MinMaxScaling, Real};
use bcmer::nearest::{Explanation, NearestBoundaryModel};
use bcmer::policy::Policy;
use bcmer::teachers::{
    collect, default_grid, train_q_teacher, ExternalTeacher, QLearningConfig, ScriptedTeacher,
};
use bcmer::tree::DecisionTreeModel;
use bcmer::viz;

#[derive(Parser)]
#[command(
    name = "bcmer",
    version,
    about = "Distil a teacher policy into a condensed nearest-neighbour student"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record (state, action) pairs from a teacher.
    Collect(CollectArgs),
    /// Drop interior experiences from a pool.
    Condense(CondenseArgs),
    /// Fit a nearest-neighbour or tree model to a pool.
    Fit(FitArgs),
    /// Ask a saved model for the action in one state.
    Predict(PredictArgs),
    /// Compare a student with its teacher and roll both out.
    Evaluate(EvaluateArgs),
    /// Run the full experiment grid and write CSV and summary reports.
    Suite(SuiteArgs),
    /// Draw a pool as SVG or a model's decision regions as PPM.
    Visualize(VisualizeArgs),
}

#[derive(Args)]
struct TeacherArgs {
    /// scripted, qlearn or external
    #[arg(long, default_value = "scripted")]
    teacher: String,
    /// Shell command for an external teacher.
    #[arg(long)]
    teacher_command: Option<String>,
    /// Training episodes for a Q-learning teacher.
    #[arg(long, default_value_t = QLearningConfig::default().episodes)]
    qlearn_episodes: usize,
}

#[derive(Args)]
struct CollectArgs {
    #[arg(long)]
    env: EnvKind,
    #[command(flatten)]
    teacher: TeacherArgs,
    /// Number of raw pairs to record.
    #[arg(long)]
    n: usize,
    #[arg(long, env = "BCMER_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CondenseArgs {
    #[arg(long)]
    pool: PathBuf,
    /// Where to write the condensed pool.
    #[arg(long)]
    out: PathBuf,
    /// Where to write the per-point classification.
    #[arg(long)]
    result: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    pool: PathBuf,
    /// brute, kdtree, balltree or dt_<gini|entropy>_l<depth>
    #[arg(long, default_value = "kdtree")]
    model: ModelSpec,
    /// Measure nearest-neighbour distances after min-max scaling.
    #[arg(long)]
    scale: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated state components.
    #[arg(long, allow_hyphen_values = true)]
    state: String,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    env: EnvKind,
    #[command(flatten)]
    teacher: TeacherArgs,
    /// Saved model; the teacher is compared with itself when omitted.
    #[arg(long)]
    student: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    episodes: usize,
    #[arg(long, env = "BCMER_SEED", default_value_t = 0)]
    seed: u64,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    /// key=value config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    envs: Option<Vec<EnvKind>>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', env = "BCMER_SEED")]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<ModelSpec>>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Directory receiving report.csv and summary.txt.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VisualizeArgs {
    /// 2-D pool to scatter.
    #[arg(long, requires = "svg")]
    pool: Option<PathBuf>,
    /// Classification to mark interior points hollow; computed when absent.
    #[arg(long)]
    result: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Model whose decision regions to rasterize.
    #[arg(long, requires = "ppm")]
    model: Option<PathBuf>,
    #[arg(long)]
    ppm: Option<PathBuf>,
    /// Raster over this environment's state bounds instead of the model's
    /// pool extent.
    #[arg(long)]
    env: Option<EnvKind>,
    #[arg(long, default_value_t = viz::DEFAULT_RASTER.0)]
    width: usize,
    #[arg(long, default_value_t = viz::DEFAULT_RASTER.1)]
    height: usize,
}

enum Model {
    Nearest(NearestBoundaryModel),
    Tree(DecisionTreeModel),
}

impl Model {
    fn load(path: &Path) -> Result<Model> {
        let text = read(path)?;
        let model = if text.starts_with("#nbmodel") {
            Model::Nearest(NearestBoundaryModel::parse(&text)?)
        } else if text.starts_with("#tree") {
            Model::Tree(DecisionTreeModel::parse(&text)?)
        } else {
            bail!("{}: not a model file", path.display());
        };
        Ok(model)
    }

    fn dim(&self) -> usize {
        match self {
            Model::Nearest(m) => m.pool().dim(),
            Model::Tree(m) => m.dim(),
        }
    }
}

impl Policy for Model {
    fn act(&self, state: &[f64]) -> bcmer::Result<ActionId> {
        match self {
            Model::Nearest(m) => m.act(state),
            Model::Tree(m) => m.act(state),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_pool(path: &Path) -> Result<ExperiencePool> {
    ExperiencePool::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn teacher_spec(args: &TeacherArgs) -> Result<TeacherSpec> {
    Ok(match args.teacher.as_str() {
        "scripted" => TeacherSpec::Scripted,
        "qlearn" => {
            let d = QLearningConfig::default();
            TeacherSpec::QLearn {
                episodes: args.qlearn_episodes,
                alpha: d.alpha,
                gamma: d.gamma,
            }
        }
        "external" => match &args.teacher_command {
            Some(cmd) => TeacherSpec::External(cmd.clone()),
            None => bail!("--teacher external needs --teacher-command"),
        },
        other => bail!("unknown teacher `{other}`"),
    })
}

fn build_teacher(args: &TeacherArgs, env: EnvKind, seed: u64) -> Result<Box<dyn Policy>> {
    let spec = teacher_spec(args)?;
    Ok(match &spec {
        TeacherSpec::Scripted => Box::new(ScriptedTeacher(env)),
        TeacherSpec::QLearn { .. } => {
            let config = spec.q_learning(seed).expect("q-learning spec");
            let trained = train_q_teacher(env.make().as_mut(), default_grid(env), &config)?;
            Box::new(trained.table)
        }
        TeacherSpec::External(cmd) => Box::new(ExternalTeacher::spawn(cmd)?),
    })
}

fn parse_state(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad state component `{}`", v.trim()))
        })
        .collect()
}

fn run_collect(args: CollectArgs) -> Result<()> {
    let teacher = build_teacher(&args.teacher, args.env, args.seed)?;
    let c = collect(args.env.make().as_mut(), &teacher, args.n, args.seed)?;
    write(&args.out, c.pool.to_text())?;
    println!(
        "collected {} raw pairs, {} after deduplication",
        c.raw,
        c.pool.len()
    );
    Ok(())
}

fn run_condense(args: CondenseArgs) -> Result<()> {
    let pool = read_pool(&args.pool)?;
    if pool.distinct_actions() == 1 {
        eprintln!("warning: pool holds a single action; every point is kept");
    }
    let (kept, result) = condense(&pool)?;
    write(&args.out, kept.to_text())?;
    if let Some(path) = &args.result {
        write(path, result.to_text())?;
    }
    println!(
        "retained {} of {} ({} interior)",
        result.retained(),
        result.total(),
        result.interior_indices.len()
    );
    Ok(())
}

fn run_fit(args: FitArgs) -> Result<()> {
    let pool = read_pool(&args.pool)?;
    let text = match args.model {
        ModelSpec::Nearest(backend) => {
            let model = if args.scale {
                let scaling = MinMaxScaling::fit(&pool)?;
                NearestBoundaryModel::fit_scaled(pool, backend, scaling)?
            } else {
                NearestBoundaryModel::fit(pool, backend)?
            };
            model.to_text()
        }
        ModelSpec::Tree { criterion, depth } => {
            if args.scale {
                bail!("--scale applies to nearest-neighbour models only");
            }
            DecisionTreeModel::fit(&pool, criterion, depth)?.to_text()
        }
        other => bail!("cannot fit `{other}`"),
    };
    write(&args.out, text)?;
    println!("wrote {} model to {}", args.model, args.out.display());
    Ok(())
}

fn run_predict(args: PredictArgs) -> Result<()> {
    let model = Model::load(&args.model)?;
    let state = parse_state(&args.state)?;
    match &model {
        Model::Nearest(m) => {
            let (
                action,
                Explanation {
                    nearest_index,
                    nearest_distance,
                },
            ) = m.predict(&state)?;
            let support = m.pool().state(nearest_index);
            let support: Vec<String> = support.iter().map(|&v| Real(v).to_string()).collect();
            println!("action {action}");
            println!(
                "nearest experience {nearest_index} at ({}) distance {}",
                support.join(","),
                Real(nearest_distance)
            );
        }
        Model::Tree(m) => println!("action {}", m.predict(&state)?),
    }
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let teacher = build_teacher(&args.teacher, args.env, args.seed)?;
    let student: Box<dyn Policy> = match &args.student {
        Some(path) => {
            let m = Model::load(path)?;
            let want = args.env.descriptor().state_dim;
            if m.dim() != want {
                bail!(
                    "model has {} state dimensions, {} has {want}",
                    m.dim(),
                    args.env
                );
            }
            Box::new(m)
        }
        None => Box::new(&teacher),
    };
    let seed = EpisodeSeeds::new(args.seed).next().expect("endless");
    let mut env = args.env.make();
    let sim = similarity_eval(&teacher, &student, env.as_mut(), args.episodes, seed)?;
    let t = rollout_return(&teacher, env.as_mut(), args.episodes, seed)?;
    let s = rollout_return(&student, env.as_mut(), args.episodes, seed)?;
    let mean = sim.episode_mean();
    let report = format!(
        "env={}\nepisodes={}\nseed={}\ndecisions={}\nmae={}\nrmsd={}\nacc={}\n\
         episode_mean_mae={}\nepisode_mean_rmsd={}\nepisode_mean_acc={}\n\
         teacher_return={} +- {}\nstudent_return={} +- {}\n",
        args.env,
        args.episodes,
        args.seed,
        sim.pooled.n_decisions,
        Real(sim.pooled.mae),
        Real(sim.pooled.rmsd),
        Real(sim.pooled.acc),
        Real(mean.mae),
        Real(mean.rmsd),
        Real(mean.acc),
        Real(t.mean),
        Real(t.std),
        Real(s.mean),
        Real(s.std),
    );
    print!("{report}");
    if let Some(path) = &args.out {
        write(path, format!("#evaluation\n{report}"))?;
    }
    Ok(())
}

fn run_suite(args: SuiteArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => SuiteConfig::parse(&read(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => SuiteConfig::default(),
    };
    if let Some(v) = args.envs {
        config.envs = v;
    }
    if let Some(v) = args.sizes {
        config.sizes = v;
    }
    if let Some(v) = args.seeds {
        config.seeds = v;
    }
    if let Some(v) = args.models {
        config.models = v;
    }
    if let Some(v) = args.episodes {
        config.episodes = v;
    }
    let report = run_experiment_suite(&config)?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    write(&args.out_dir.join("report.csv"), report.to_csv())?;
    write(&args.out_dir.join("summary.txt"), report.summary())?;
    let failed = report.rows.iter().filter(|r| r.outcome.is_err()).count();
    println!(
        "{} rows written to {}",
        report.rows.len(),
        args.out_dir.display()
    );
    if failed > 0 {
        eprintln!("warning: {failed} cell(s) failed; see summary.txt");
    }
    Ok(())
}

fn run_visualize(args: VisualizeArgs) -> Result<()> {
    if args.pool.is_none() && args.model.is_none() {
        bail!("nothing to draw: pass --pool and/or --model");
    }
    if let (Some(pool_path), Some(svg)) = (&args.pool, &args.svg) {
        let pool = read_pool(pool_path)?;
        let result = match &args.result {
            Some(path) => CondensationResult::read_from(read(path)?.as_bytes())?,
            None => condense(&pool)?.1,
        };
        write(svg, viz::scatter_svg(&pool, Some(&result))?)?;
    }
    if let (Some(model_path), Some(ppm)) = (&args.model, &args.ppm) {
        let model = Model::load(model_path)?;
        let bounds = match (args.env, &model) {
            (Some(env), _) => env.descriptor().bounds,
            (None, Model::Nearest(m)) => viz::pool_bounds(m.pool())?,
            (None, Model::Tree(_)) => bail!("tree models need --env for raster bounds"),
        };
        if bounds
            .iter()
            .any(|(lo, hi)| !lo.is_finite() || !hi.is_finite())
        {
            bail!("state bounds are unbounded; cannot rasterize");
        }
        write(
            ppm,
            viz::region_ppm(&model, &bounds, args.width, args.height)?,
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Collect(a) => run_collect(a),
        Command::Condense(a) => run_condense(a),
        Command::Fit(a) => run_fit(a),
        Command::Predict(a) => run_predict(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Suite(a) => run_suite(a),
        Command::Visualize(a) => run_visualize(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
