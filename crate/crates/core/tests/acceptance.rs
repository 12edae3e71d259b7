//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! fails.

mod common;

use std::time::{Duration, Instant};

use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{gen, oracles};
use sketchreward::constraint::{eval_constraint, is_satisfied, Constraint};
use sketchreward::dsl::{eval_program, partial_eval};
use sketchreward::env::{rollout, Env, TabularMdp};
use sketchreward::estimators::{
    exact_costs, exact_expectation, exact_zl, normalized_weights, two_batch_estimate,
};
use sketchreward::learner::{train, write_metrics, TrainConfig, TrainInputs, TrainOutput};
use sketchreward::study::{behaviour_policy, run_study, StudyConfig, StudyKind};
use sketchreward::trajectory::Trajectory;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;
type Program<'a> = Box<dyn Fn(&Trajectory) -> f64 + 'a>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    })
}

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}

fn dsl_soundness() -> Outcome {
    runner()
        .run(&gen::case(), |(s, h, tau)| {
            let out = eval_program(&s, &h, &tau).unwrap();
            if out.len() != tau.len() {
                return Err(TestCaseError::fail("length"));
            }
            if bits(&partial_eval(&s, &tau).apply(&h).unwrap()) != bits(&out) {
                return Err(TestCaseError::fail("partial evaluation differs"));
            }
            for t in 0..tau.len() {
                if bits(&eval_program(&s, &h, &tau.truncated(t + 1)).unwrap()) != bits(&out[..=t]) {
                    return Err(TestCaseError::fail(format!("prefix {t} differs")));
                }
            }
            Ok(())
        })
        .map(|_| "1000 random (sketch, h, tau): length, bitwise residual, prefix causality".into())
        .map_err(|e| e.to_string())
}

fn constraint_semantics() -> Outcome {
    let strategy = (gen::constraint(), gen::constraint(), gen::point());
    runner()
        .run(&strategy, |(a, b, h)| {
            for c in [&a, &b] {
                let v = eval_constraint(c, &h);
                if v != 1.0 && v != -1.0 {
                    return Err(TestCaseError::fail(format!("eval gave {v}")));
                }
            }
            let (sa, sb) = (is_satisfied(&a, &h), is_satisfied(&b, &h));
            let and = is_satisfied(&Constraint::and([a.clone(), b.clone()]), &h);
            let or = is_satisfied(&Constraint::or([a.clone(), b]), &h);
            let not = is_satisfied(&Constraint::not(a), &h);
            if and != (sa && sb) || or != (sa || sb) || not == sa {
                return Err(TestCaseError::fail("connective mismatch"));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let all = common::doorkey_constraint();
    for (h, want) in common::DOORKEY_CASES {
        if common::doorkey_predicates(&h) != want
            || is_satisfied(&all, &h) != want.iter().all(|x| *x)
        {
            return Err(format!("DoorKey predicates misclassify {h:?}"));
        }
    }
    Ok(format!(
        "1000 random cases, range {{-1,+1}}, {} DoorKey worked examples",
        common::DOORKEY_CASES.len()
    ))
}

fn toy_config(ms: Vec<usize>, reps: usize) -> StudyConfig {
    StudyConfig {
        ms,
        reps,
        holes: common::TOY_HOLES.to_vec(),
        ..StudyConfig::default()
    }
}

fn snis_consistency() -> Outcome {
    let mdp = TabularMdp::toy_three_state();
    let l = common::toy_program(&mdp);
    let big = run_study(StudyKind::Snis, &mdp, &l, &toy_config(vec![20_000], 100))
        .map_err(|e| e.to_string())?;
    let within = big
        .rows
        .iter()
        .filter(|r| r.abs_err.unwrap() <= 0.05 * r.exact.unwrap().abs())
        .count();
    let sweep = run_study(
        StudyKind::Snis,
        &mdp,
        &l,
        &toy_config(vec![100, 1000, 10_000], 50),
    )
    .map_err(|e| e.to_string())?;
    let med: Vec<f64> = sweep.summary.iter().map(|s| s.median_abs_err).collect();
    check(
        within >= 95 && med[0] > med[1] && med[1] > med[2],
        format!(
            "m=20000 within 5%: {within}/100; median |err| {:.4} > {:.4} > {:.4}",
            med[0], med[1], med[2]
        ),
    )
}

fn unbiasedness() -> Outcome {
    let mdp = TabularMdp::toy_three_state();
    let l = common::toy_program(&mdp);
    let cost = |t: &Trajectory| mdp.cost(t).unwrap();
    let z = exact_zl(&mdp, &l).map_err(|e| e.to_string())?;
    let j = exact_expectation(&mdp, &l, cost).map_err(|e| e.to_string())?;
    let policy = behaviour_policy(&mdp, &StudyConfig::default()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let reps = 10_000;
    let m = 10;
    let (mut num, mut den) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
    for _ in 0..reps {
        let bi: Vec<_> = (0..m).map(|_| rollout(&policy, &mdp, &mut rng)).collect();
        let bj: Vec<_> = (0..m).map(|_| rollout(&policy, &mdp, &mut rng)).collect();
        let tb =
            two_batch_estimate(&bi, &bj, mdp.n_actions(), &l, cost).map_err(|e| e.to_string())?;
        num.push(tb.numerator);
        den.push(tb.denominator);
    }
    let z_scores: Vec<f64> = [(num, z * j), (den, z)]
        .into_iter()
        .map(|(xs, target)| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            (mean - target) / (sd / n.sqrt())
        })
        .collect();
    check(
        z_scores.iter().all(|s| s.abs() < 3.0),
        format!(
            "10^4 replications, m={m}: numerator {:+.2} SE, denominator {:+.2} SE",
            z_scores[0], z_scores[1]
        ),
    )
}

fn interval_coverage() -> Outcome {
    let mdp = TabularMdp::toy_three_state();
    let l = common::toy_program(&mdp);
    let r = run_study(
        StudyKind::Theorem1,
        &mdp,
        &l,
        &toy_config(vec![10_000], 500),
    )
    .map_err(|e| e.to_string())?;
    let s = &r.summary[0];
    let (freq, bound) = (s.frequency.unwrap(), s.bound.unwrap());
    check(
        bound >= 0.6 && freq >= bound,
        format!(
            "m=10000, gamma=1: coverage {freq:.3} >= confidence {bound:.3} over 500 replications"
        ),
    )
}

/// Three programs `s * l` with `s` in {-1, 0, 1}. With `d = 2.3` and
/// `kappa = 0.5` the first is unsafe and the other two are safe but inside
/// the slack band, so `L_c = 0.8`.
fn safety_bound() -> Outcome {
    let mdp = TabularMdp::toy_three_state();
    let l = common::toy_program(&mdp);
    let cfg = StudyConfig {
        scales: vec![-1.0, 0.0, 1.0],
        q: vec![0.2, 0.3, 0.5],
        d: 2.3,
        kappa: 0.5,
        ..toy_config(vec![100, 1000], 500)
    };
    let lr = &l;
    let progs: Vec<Program> = cfg
        .scales
        .iter()
        .map(|&s| Box::new(move |t: &Trajectory| s * lr(t)) as Program)
        .collect();
    let refs: Vec<&dyn Fn(&Trajectory) -> f64> = progs.iter().map(|b| b.as_ref()).collect();
    let jc = exact_costs(&mdp, &refs).map_err(|e| e.to_string())?;
    let r = run_study(StudyKind::Safety, &mdp, &l, &cfg).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = vec![format!("J_c {:.3?}, d={}, kappa={}", jc, cfg.d, cfg.kappa)];
    for s in &r.summary {
        let (f, b) = (s.frequency.unwrap(), s.bound.unwrap());
        if b < 1.0 && f > b {
            ok = false;
        }
        parts.push(format!("m={}: freq {f:.3} vs bound {b:.3}", s.m));
    }
    check(ok, parts.join("; "))
}

fn gradient_oracles() -> Outcome {
    let lt = oracles::logtrick_vs_differences(10_000, 7);
    let adv = oracles::j_adv_gradient_error(8);
    let soft = oracles::stochastic_gradient_error(true, 9);
    let hard = oracles::stochastic_gradient_error(false, 9);
    let pen = oracles::penalty_gradient_error(1000, 10);
    let f_err = adv.max(soft).max(hard);
    check(
        lt < 0.10 && f_err < 1e-5 && pen < 1e-5,
        format!("log-trick rel err {lt:.3} (K=10^4); f-gradient max err {f_err:.1e}; J_c-gradient max err {pen:.1e}"),
    )
}

fn closed_forms() -> Outcome {
    let ent = oracles::entropy_mc_rel_err(200_000, 11);
    let kl = oracles::kl_quadrature_error();
    let lw = [0.3, -1.2, 4.0, 2.2, -0.7, 10.0];
    let a = normalized_weights(&lw);
    let shift = [-650.0, -1.0, 0.25, 7.0, 650.0]
        .iter()
        .map(|c| {
            let b = normalized_weights(&lw.map(|x| x + c));
            a.iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    check(
        ent < 0.01 && kl < 1e-6 && shift <= 1e-12,
        format!(
            "entropy vs MC {:.3}%; KL vs quadrature {kl:.1e}; SNIS shift drift {shift:.1e}",
            ent * 100.0
        ),
    )
}

fn doorkey_run(n_demos: usize) -> Result<TrainOutput, String> {
    let env = common::doorkey_env();
    let sketch = common::doorkey_sketch(&env);
    let constraint = common::doorkey_constraint();
    let demos = common::expert_demos(&env, n_demos, 0);
    let cfg =
        TrainConfig::parse(&std::fs::read_to_string(common::data_dir().join("train.cfg")).unwrap())
            .map_err(|e| e.to_string())?;
    let inputs = TrainInputs {
        env: &env,
        sketch: &sketch,
        constraint: &constraint,
        demos: &demos,
        cost: None,
    };
    train(&cfg, &inputs).map_err(|e| e.to_string())
}

fn describe(out: &TrainOutput) -> (bool, String) {
    let h = out.program.holes().values();
    let ok_c = is_satisfied(&common::doorkey_constraint(), h);
    let order = (1..5).all(|i| h[i] <= h[0]) && h[4] + h[3] <= 0.0;
    let first = out
        .metrics
        .iter()
        .find(|r| r.eval_success.is_some_and(|s| s >= 0.8))
        .map(|r| r.frames);
    let ok = ok_c && order && out.final_success >= 0.8 && out.frames <= 200_000 && first.is_some();
    let hs: Vec<String> = h.iter().map(|x| format!("{x:.3}")).collect();
    (
        ok,
        format!(
            "holes [{}], constraint {}, ordering {}, success {:.2} (>=0.8 first at {} frames, {} total)",
            hs.join(", "),
            if ok_c { "ok" } else { "violated" },
            if order { "ok" } else { "violated" },
            out.final_success,
            first.map_or("never".into(), |f| f.to_string()),
            out.frames
        ),
    )
}

fn end_to_end() -> Outcome {
    let (ten, one) = rayon::join(|| doorkey_run(10), || doorkey_run(1));
    let (ok10, d10) = describe(&ten?);
    let (ok1, d1) = describe(&one?);
    // fixed start and a deterministic expert: the 10 demos are copies of one
    check(ok10 && ok1, format!("10 demos: {d10} | 1 demo: {d1}"))
}

fn reproducibility() -> Outcome {
    let env = common::doorkey_env();
    let sketch = common::doorkey_sketch(&env);
    let constraint = common::doorkey_constraint();
    let demos = common::expert_demos(&env, 3, 0);
    let cfg = TrainConfig {
        n_iter: 40,
        eval_every: 10,
        eval_episodes: 20,
        seed: 17,
        ..TrainConfig::default()
    };
    let inputs = TrainInputs {
        env: &env,
        sketch: &sketch,
        constraint: &constraint,
        demos: &demos,
        cost: None,
    };
    let csv = || -> Result<Vec<u8>, String> {
        let out = train(&cfg, &inputs).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_metrics(&mut buf, &out.metrics).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let (a, b) = (csv()?, csv()?);
    check(
        a == b,
        format!(
            "two seeded runs: {} bytes each, identical: {}",
            a.len(),
            a == b
        ),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("DSL soundness", dsl_soundness),
        ("constraint semantics", constraint_semantics),
        ("SNIS consistency", snis_consistency),
        ("two-batch unbiasedness", unbiasedness),
        ("interval coverage", interval_coverage),
        ("safety tail bound", safety_bound),
        ("gradient oracles", gradient_oracles),
        ("closed-form checks", closed_forms),
        ("DoorKey end to end", end_to_end),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = fmt_secs(t.elapsed());
        match r {
            Ok(d) => println!("PASS {:>2} {name} [{secs}]: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs}]: {d}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}
