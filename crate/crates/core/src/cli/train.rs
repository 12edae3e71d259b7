use std::fs::File;
use std::io::BufWriter;

use anyhow::Context;
use serde_json::json;

use sketchreward::constraint::{is_satisfied, parse_constraints};
use sketchreward::dsl::{parse_sketch, print_sketch};
use sketchreward::env::load_demos;
use sketchreward::learner::{train_with, write_metrics, TrainConfig, TrainInputs};
use sketchreward::trajectory::Trajectory;

use super::manifest::Manifest;
use super::svg::{line_chart, Chart, Series};
use super::{
    classify, create_dir, init_threads, read, resolve_seed, write, CliResult, LoadedEnv, ResultExt,
    TrainArgs,
};

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let mut manifest = Manifest::start("train");
    init_threads(args.jobs)?;
    let mut cfg = match &args.config {
        Some(p) => TrainConfig::parse(&read(p)?).user_ctx(|| p.display().to_string())?,
        None => TrainConfig::default(),
    };
    cfg.seed = resolve_seed(cfg.seed, args.seed)?;
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    cfg.validate().user()?;

    let env = LoadedEnv::load(args.env.as_deref())?;
    let vocab = env.as_env().vocabulary().clone();
    let sketch = parse_sketch(&read(&args.sketch)?, vocab.clone())
        .user_ctx(|| args.sketch.display().to_string())?;
    let constraint = parse_constraints(&read(&args.constraint)?)
        .and_then(|f| f.link(sketch.n_holes()))
        .user_ctx(|| args.constraint.display().to_string())?;
    let demos = load_demos(&args.demos, &vocab).user_ctx(|| args.demos.display().to_string())?;
    let mdp_cost;
    let cost: Option<&(dyn Fn(&Trajectory) -> f64 + Sync)> = match &env {
        LoadedEnv::Mdp(m) if m.has_costs() => {
            mdp_cost = move |t: &Trajectory| m.cost(t).expect("cost table present");
            Some(&mdp_cost)
        }
        _ => None,
    };
    create_dir(&args.out)?;

    let inputs = TrainInputs {
        env: env.as_env(),
        sketch: &sketch,
        constraint: &constraint,
        demos: &demos.trajectories,
        cost,
    };
    let out = train_with(&cfg, &inputs, &mut |r| {
        if let Some(s) = r.eval_success {
            eprintln!(
                "iter {:>6}  frames {:>7}  success {:.2}  J_gen {:.3}",
                r.iter, r.frames, s, r.j_gen
            );
        }
    })
    .map_err(classify)?;

    let program_path = args.out.join("program.rsk");
    write(&program_path, &print_sketch(&out.program.complete()))?;

    let policy_path = args.out.join("policy.json");
    let p = &out.policy;
    let policy = json!({
        "n_states": p.n_states(),
        "n_actions": p.n_actions(),
        "eps_floor": p.eps_floor(),
        "logits": p.logits(),
    });
    write(
        &policy_path,
        &(serde_json::to_string(&policy).internal()? + "\n"),
    )?;

    let metrics_path = args.out.join("metrics.csv");
    let f = File::create(&metrics_path)
        .with_context(|| format!("cannot write {}", metrics_path.display()))
        .internal()?;
    write_metrics(BufWriter::new(f), &out.metrics).map_err(classify)?;

    let curve_path = args.out.join("learning_curve.svg");
    let points = out
        .metrics
        .iter()
        .filter_map(|r| r.eval_success.map(|s| (r.frames as f64, s)))
        .collect();
    let chart = Chart {
        title: "greedy success rate",
        x_label: "environment frames",
        y_label: "success",
        log_x: false,
        log_y: false,
    };
    let svg = line_chart(
        &chart,
        &[Series {
            name: cfg.mode.to_string(),
            points,
        }],
    );
    write(&curve_path, &svg)?;

    let holes = out.program.holes().values();
    let holes_path = args.out.join("holes.txt");
    let list: Vec<String> = holes.iter().map(f64::to_string).collect();
    write(&holes_path, &(list.join(",") + "\n"))?;
    let ok = is_satisfied(&constraint, holes);
    println!("holes: {holes:?}");
    println!("constraint satisfied: {}", if ok { "yes" } else { "no" });
    println!(
        "frames {}  final greedy success {:.2}  polish steps {}",
        out.frames, out.final_success, out.polish_steps
    );

    manifest.seed = Some(cfg.seed);
    manifest.config = cfg.to_kv();
    if let Some(p) = &args.config {
        manifest.input("config", p);
    }
    manifest.input("sketch", &args.sketch);
    manifest.input("constraint", &args.constraint);
    manifest.input("demos", &args.demos);
    if let Some(p) = &args.env {
        manifest.input("env", p);
    }
    manifest.artifact("program", &program_path);
    manifest.artifact("holes", &holes_path);
    manifest.artifact("policy", &policy_path);
    manifest.artifact("metrics", &metrics_path);
    manifest.artifact("learning_curve", &curve_path);
    manifest.param("holes", holes);
    manifest.param("log_var", &out.sampler.log_var);
    manifest.param("log_z_hat", out.sampler.log_z_hat);
    manifest.param("frames", out.frames);
    manifest.param("final_success", out.final_success);
    manifest.param("constraint_satisfied", ok);
    manifest.param("polish_steps", out.polish_steps);
    manifest.param("lambda", out.lambda);
    manifest.finish(&args.out.join("manifest.json"))
}
