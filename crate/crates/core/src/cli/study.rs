use std::fs::File;
use std::io::BufWriter;

use anyhow::{anyhow, Context};

use sketchreward::dsl::{parse_sketch, total_reward};
use sketchreward::env::{Env, TabularMdp};
use sketchreward::estimators::{write_report, EstimatorError};
use sketchreward::study::{run_study, StudyConfig, StudyError};
use sketchreward::trajectory::Trajectory;

use super::manifest::Manifest;
use super::svg::{line_chart, Chart, Series};
use super::{
    create_dir, init_threads, read, resolve_seed, write, CliError, CliResult, LoadedEnv, ResultExt,
    StudyArgs,
};

fn classify(e: StudyError) -> CliError {
    match e {
        StudyError::Estimator(EstimatorError::NonFinite)
        | StudyError::Estimator(EstimatorError::Csv(_)) => CliError::Internal(e.into()),
        _ => CliError::User(e.into()),
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

pub fn run(args: &StudyArgs) -> CliResult<()> {
    let mut manifest = Manifest::start("study");
    init_threads(args.jobs)?;
    let mut cfg = match &args.config {
        Some(p) => StudyConfig::parse(&read(p)?).user_ctx(|| p.display().to_string())?,
        None => StudyConfig::default(),
    };
    cfg.seed = resolve_seed(cfg.seed, args.seed)?;

    let mdp = match &args.env {
        None => TabularMdp::toy_three_state(),
        Some(p) => match LoadedEnv::load(Some(p))? {
            LoadedEnv::Mdp(m) => m,
            LoadedEnv::Grid(_) => {
                return Err(CliError::User(anyhow!(
                    "studies need an explicit MDP (.json), got a gridworld"
                )))
            }
        },
    };
    let sketch = match &args.sketch {
        Some(p) => {
            let s = parse_sketch(&read(p)?, mdp.vocabulary().clone())
                .user_ctx(|| p.display().to_string())?;
            if s.n_holes() != cfg.holes.len() {
                return Err(CliError::User(anyhow!(
                    "the sketch has {} holes but the study config gives {} values",
                    s.n_holes(),
                    cfg.holes.len()
                )));
            }
            Some(s)
        }
        None => None,
    };
    let l = |t: &Trajectory| match &sketch {
        Some(s) => total_reward(s, &cfg.holes, t).expect("hole count checked"),
        None => 0.0,
    };

    let result = run_study(args.kind, &mdp, &l, &cfg).map_err(classify)?;
    create_dir(&args.out)?;
    let csv_path = args.out.join(format!("study_{}.csv", args.kind));
    let f = File::create(&csv_path)
        .with_context(|| format!("cannot write {}", csv_path.display()))
        .internal()?;
    write_report(BufWriter::new(f), &result.rows).internal()?;

    let svg_path = args.out.join(format!("study_{}.svg", args.kind));
    let points = result
        .summary
        .iter()
        .map(|s| (s.m as f64, s.median_abs_err))
        .collect();
    let chart = Chart {
        title: &format!("{} study: median absolute error", args.kind),
        x_label: "m",
        y_label: "median |estimate - exact|",
        log_x: true,
        log_y: true,
    };
    write(
        &svg_path,
        &line_chart(
            &chart,
            &[Series {
                name: args.kind.to_string(),
                points,
            }],
        ),
    )?;

    println!(
        "{:>8} {:>14} {:>10} {:>10}",
        "m", "median_abs_err", "frequency", "bound"
    );
    for s in &result.summary {
        println!(
            "{:>8} {:>14.6} {:>10} {:>10}",
            s.m,
            s.median_abs_err,
            fmt_opt(s.frequency),
            fmt_opt(s.bound)
        );
    }

    manifest.seed = Some(cfg.seed);
    manifest.config = cfg.to_kv();
    manifest.param("kind", args.kind.to_string());
    for (name, p) in [
        ("config", &args.config),
        ("env", &args.env),
        ("sketch", &args.sketch),
    ] {
        if let Some(p) = p {
            manifest.input(name, p);
        }
    }
    manifest.artifact("report", &csv_path);
    manifest.artifact("plot", &svg_path);
    manifest.finish(&args.out.join(format!("manifest_{}.json", args.kind)))
}
