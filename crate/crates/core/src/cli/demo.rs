use anyhow::anyhow;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sketchreward::env::{rollout_with_outcome, save_demos, DemoSet, Env};

use super::manifest::Manifest;
use super::{resolve_seed, CliError, CliResult, DemoArgs, LoadedEnv, ResultExt};

pub fn run(args: &DemoArgs) -> CliResult<()> {
    let mut manifest = Manifest::start("demo");
    let env = LoadedEnv::load(args.env.as_deref())?;
    let LoadedEnv::Grid(grid) = &env else {
        return Err(CliError::User(anyhow!(
            "demonstrations need a gridworld layout, not an explicit MDP"
        )));
    };
    let seed = resolve_seed(grid.config().seed, args.seed)?;
    let expert = grid.expert();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectories = Vec::with_capacity(args.n);
    for i in 0..args.n {
        let (t, reached) = rollout_with_outcome(&expert, grid, &mut rng);
        if !reached {
            return Err(CliError::Internal(anyhow!(
                "the planner did not reach the goal in demo {i}"
            )));
        }
        trajectories.push(t);
    }
    let name = args
        .env
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "doorkey-6x6".into());
    let set = DemoSet {
        env: name,
        seed,
        expert: "shortest-path planner".into(),
        trajectories,
    };
    save_demos(&set, grid.vocabulary(), &args.out).user()?;
    println!("wrote {} demonstrations to {}", args.n, args.out.display());

    manifest.seed = Some(seed);
    manifest.config = grid.config().to_kv();
    if let Some(p) = &args.env {
        manifest.input("env", p);
    }
    manifest.artifact("demos", &args.out);
    manifest.param("n", args.n);
    let path = args.out.with_extension("manifest.json");
    manifest.finish(&path)
}
