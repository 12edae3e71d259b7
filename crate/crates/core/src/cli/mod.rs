//! `sketchreward {check|demo|train|study}`.

mod check;
mod demo;
mod manifest;
mod study;
mod svg;
mod train;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use sketchreward::env::{Env, GridConfig, GridEnv, TabularMdp};
use sketchreward::learner::{LearnerError, Mode};
use sketchreward::study::StudyKind;

pub const SEED_VAR: &str = "SKETCHREWARD_SEED";

#[derive(Parser, Debug)]
#[command(name = "sketchreward", version = manifest::VERSION, about = "Learn reward-sketch holes from demonstrations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a sketch (and optionally a constraint file) and report what it holds
    Check(CheckArgs),
    /// Write expert demonstrations for a gridworld layout
    Demo(DemoArgs),
    /// Learn the holes of a sketch and a policy
    Train(TrainArgs),
    /// Replication sweep of an estimator against exact enumeration
    Study(StudyArgs),
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub sketch: PathBuf,
    #[arg(long)]
    pub constraint: Option<PathBuf>,
    /// Environment giving the token vocabulary (DoorKey if omitted)
    #[arg(long)]
    pub env: Option<PathBuf>,
    /// Hole values to test against the constraint, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub holes: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// Gridworld layout (`key = value`); the fixed 6x6 layout if omitted
    #[arg(long)]
    pub env: Option<PathBuf>,
    #[arg(long, short, default_value_t = 10)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub sketch: PathBuf,
    #[arg(long)]
    pub constraint: PathBuf,
    #[arg(long)]
    pub demos: PathBuf,
    /// `.json` for an explicit MDP, anything else is a gridworld layout
    #[arg(long)]
    pub env: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Worker threads (0: one per core)
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    #[arg(long)]
    pub kind: StudyKind,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Explicit MDP (`.json`); the built-in 3-state MDP if omitted
    #[arg(long)]
    pub env: Option<PathBuf>,
    /// Program `l`; zero reward if omitted
    #[arg(long)]
    pub sketch: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

/// Failure with its exit code: 1 for bad input, 2 for internal or
/// numerical aborts.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0:#}")]
    User(anyhow::Error),
    #[error("{0:#}")]
    Internal(anyhow::Error),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait ResultExt<T> {
    fn user(self) -> CliResult<T>;
    fn user_ctx(self, ctx: impl FnOnce() -> String) -> CliResult<T>;
    fn internal(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn user(self) -> CliResult<T> {
        self.map_err(|e| CliError::User(e.into()))
    }

    fn user_ctx(self, ctx: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| CliError::User(e.into().context(ctx())))
    }

    fn internal(self) -> CliResult<T> {
        self.map_err(|e| CliError::Internal(e.into()))
    }
}

/// Numerical trouble and broken invariants exit with 2, everything that
/// bad input can cause exits with 1.
pub fn classify(e: LearnerError) -> CliError {
    match e {
        LearnerError::NonFinite { .. } | LearnerError::Estimator(_) | LearnerError::Policy(_) => {
            CliError::Internal(e.into())
        }
        LearnerError::Io(_) | LearnerError::Csv(_) => CliError::Internal(e.into()),
        _ => CliError::User(e.into()),
    }
}

pub fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .user()
}

pub fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .internal()
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path)
        .with_context(|| format!("cannot create {}", path.display()))
        .user()
}

/// Seed precedence: config file, then the environment variable, then the
/// command-line flag.
pub fn resolve_seed(config: u64, flag: Option<u64>) -> CliResult<u64> {
    let mut seed = config;
    if let Ok(v) = std::env::var(SEED_VAR) {
        seed = v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_VAR}=`{v}` is not an unsigned integer"))
            .user()?;
    }
    Ok(flag.unwrap_or(seed))
}

pub fn init_threads(jobs: usize) -> CliResult<()> {
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .internal()?;
    }
    Ok(())
}

pub enum LoadedEnv {
    Grid(GridEnv),
    Mdp(TabularMdp),
}

impl LoadedEnv {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::Grid(
                GridEnv::new(GridConfig::doorkey_6x6()).internal()?,
            ));
        };
        let text = read(path)?;
        let ctx = || format!("{}", path.display());
        if path.extension().is_some_and(|e| e == "json") {
            Ok(Self::Mdp(TabularMdp::from_json(&text).user_ctx(ctx)?))
        } else {
            let cfg = GridConfig::parse(&text).user_ctx(ctx)?;
            Ok(Self::Grid(GridEnv::new(cfg).user_ctx(ctx)?))
        }
    }

    pub fn as_env(&self) -> &dyn Env {
        match self {
            Self::Grid(g) => g,
            Self::Mdp(m) => m,
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Check(a) => check::run(&a),
        Command::Demo(a) => demo::run(&a),
        Command::Train(a) => train::run(&a),
        Command::Study(a) => study::run(&a),
    }
}
