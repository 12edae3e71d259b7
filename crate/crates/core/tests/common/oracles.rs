//! Independent numerical oracles for the learner's gradients and closed
//! forms. Each returns the error it measured.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sketchreward::constraint::{grad_soft_penalty, soft_penalty};
use sketchreward::env::Env;
use sketchreward::learner::{
    grad_q_logtrick, j_adv, per_step_kl, program_terms, stochastic_objectives, Batches,
    HoleSampler, RewardModel, TrajData,
};
use sketchreward::policy::PolicyTable;

/// DoorKey batches: `n_agent` uniform rollouts and `n_demo` planner demos,
/// with a reward model of random scores.
pub fn doorkey_batches(
    n_agent: usize,
    n_demo: usize,
    seed: u64,
) -> (Batches, RewardModel, PolicyTable) {
    let env = super::doorkey_env();
    let sketch = super::doorkey_sketch(&env);
    let n = env.n_actions();
    let agent = super::uniform_rollouts(&env, n_agent, seed);
    let demos = super::expert_demos(&env, n_demo, seed);
    let mut model = RewardModel::new(env.n_states(), n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in model.scores_mut() {
        *s = rng.gen_range(-1.0..1.0);
    }
    let policy = PolicyTable::uniform(env.n_states(), n, 0.0).unwrap();
    let mut b = Batches {
        agent: agent.iter().map(|t| TrajData::new(&sketch, t, n)).collect(),
        demos: demos.iter().map(|t| TrajData::new(&sketch, t, n)).collect(),
    };
    b.refresh(&model, &policy);
    (b, model, policy)
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm
}

/// Relative error of the score-function gradient of `E_q[J_gen]` over `k`
/// samples against central differences of the same expectation, where the
/// differences reuse the samples' standard normals.
pub fn logtrick_vs_differences(k: usize, seed: u64) -> f64 {
    let (b, model, _) = doorkey_batches(8, 2, seed);
    let sampler = HoleSampler {
        mean: vec![0.6, 0.3, -0.4, 0.1, -0.2],
        log_var: vec![(0.3f64).ln(); 5],
        log_z_hat: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0FFEE);
    let eps: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            (0..5)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let draw = |s: &HoleSampler| -> Vec<Vec<f64>> {
        eps.iter()
            .map(|e| {
                e.iter()
                    .enumerate()
                    .map(|(j, z)| s.mean[j] + (0.5 * s.log_var[j]).exp() * z)
                    .collect()
            })
            .collect()
    };
    let value = |h: &[f64]| program_terms(&b, h, 0.0, &model, None).unwrap().j_gen;
    let expect = |s: &HoleSampler| draw(s).iter().map(|h| value(h)).sum::<f64>() / k as f64;

    let samples = draw(&sampler);
    let values: Vec<f64> = samples.iter().map(|h| value(h)).collect();
    let g = grad_q_logtrick(&sampler, &samples, &values).unwrap();
    let lt: Vec<f64> = g.mean.iter().chain(&g.log_var).copied().collect();

    let e = 1e-4;
    let mut fd = Vec::new();
    for which in 0..2 {
        for j in 0..5 {
            let (mut p, mut m) = (sampler.clone(), sampler.clone());
            let (vp, vm) = if which == 0 {
                (&mut p.mean, &mut m.mean)
            } else {
                (&mut p.log_var, &mut m.log_var)
            };
            vp[j] += e;
            vm[j] -= e;
            fd.push((expect(&p) - expect(&m)) / (2.0 * e));
        }
    }
    rel_err(&lt, &fd)
}

/// Largest deviation of the analytic `J_adv` score gradient from central
/// differences, over every score entry the batches touch.
pub fn j_adv_gradient_error(seed: u64) -> f64 {
    let (mut b, mut model, policy) = doorkey_batches(6, 2, seed);
    let h = [0.6, 0.3, -0.4, 0.1, -0.2];
    let mut g = vec![0.0; model.scores().len()];
    program_terms(&b, &h, 0.2, &model, Some(&mut g)).unwrap();
    let idx = touched(&b, model.n_actions());
    let e = 1e-6;
    let mut worst: f64 = 0.0;
    for i in idx {
        let x = model.scores()[i];
        let mut at = |v: f64| {
            model.scores_mut()[i] = v;
            b.refresh(&model, &policy);
            j_adv(&[h.to_vec()], &b, 0.2, &model).unwrap()
        };
        let fd = (at(x + e) - at(x - e)) / (2.0 * e);
        at(x);
        worst = worst.max((g[i] - fd).abs());
    }
    worst
}

/// Same check for the soft (`soft = true`) or hard stochastic objective of
/// the reward model, with the noise draws fixed by reseeding.
pub fn stochastic_gradient_error(soft: bool, seed: u64) -> f64 {
    let (mut b, mut model, policy) = doorkey_batches(6, 2, seed);
    let samples = vec![
        vec![0.6, 0.3, -0.4, 0.1, -0.2],
        vec![0.2, 0.1, -0.1, 0.0, -0.3],
    ];
    let sigma = 0.8;
    let objective = |b: &Batches, model: &RewardModel, grad: Option<(&mut [f64], bool)>| {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let t = stochastic_objectives(&samples, b, 0.1, model, sigma, 3, &mut rng, grad).unwrap();
        let mean_kl = t.kl.iter().sum::<f64>() / t.kl.len() as f64;
        if soft {
            t.j_noisy - mean_kl
        } else {
            t.j_clean - mean_kl - t.log_norm
        }
    };
    let mut g = vec![0.0; model.scores().len()];
    objective(&b, &model, Some((&mut g, soft)));
    let e = 1e-6;
    let mut worst: f64 = 0.0;
    for i in touched(&b, model.n_actions()) {
        let x = model.scores()[i];
        let mut at = |v: f64| {
            model.scores_mut()[i] = v;
            b.refresh(&model, &policy);
            objective(&b, &model, None)
        };
        let fd = (at(x + e) - at(x - e)) / (2.0 * e);
        at(x);
        worst = worst.max((g[i] - fd).abs());
    }
    worst
}

/// Score-table entries of every visited state.
fn touched(b: &Batches, n_actions: usize) -> Vec<usize> {
    let mut states: Vec<usize> = b
        .agent
        .iter()
        .chain(&b.demos)
        .flat_map(|t| t.steps.iter().map(|s| s.state as usize))
        .collect();
    states.sort_unstable();
    states.dedup();
    states
        .into_iter()
        .flat_map(|s| (0..n_actions).map(move |a| s * n_actions + a))
        .collect()
}

/// Largest deviation of the DoorKey penalty gradient from central
/// differences over `n` random points away from every atom boundary.
pub fn penalty_gradient_error(n: usize, seed: u64) -> f64 {
    let c = super::doorkey_constraint();
    let atoms = c.conjunctive_atoms().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < n {
        let h: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if atoms.iter().any(|a| a.u(&h).abs() <= 1e-3) {
            continue;
        }
        done += 1;
        let g = grad_soft_penalty(&c, &h).unwrap();
        let e = 1e-6;
        for i in 0..5 {
            let (mut p, mut m) = (h.clone(), h.clone());
            p[i] += e;
            m[i] -= e;
            let fd = (soft_penalty(&c, &p).unwrap() - soft_penalty(&c, &m).unwrap()) / (2.0 * e);
            worst = worst.max((g[i] - fd).abs());
        }
    }
    worst
}

/// Relative error of the closed-form Gaussian entropy against
/// `-mean log q` over `n` samples.
pub fn entropy_mc_rel_err(n: usize, seed: u64) -> f64 {
    let s = HoleSampler {
        mean: vec![0.3, -1.0, 2.0, 0.0, 0.5],
        log_var: vec![-1.0, 0.0, 0.5, -0.3, 1.2],
        log_z_hat: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mc = -(0..n).map(|_| s.log_q(&s.sample(&mut rng))).sum::<f64>() / n as f64;
    ((mc - s.entropy()) / s.entropy()).abs()
}

/// `KL(N(f, s^2) || N(l, s^2))` by composite Simpson quadrature of
/// `p log(p / q)` over `f +- 12 s`.
pub fn kl_quadrature(f: f64, l: f64, sigma: f64) -> f64 {
    let n = 20_000;
    let (a, b) = (f - 12.0 * sigma, f + 12.0 * sigma);
    let dx = (b - a) / n as f64;
    let logn = |x: f64, mu: f64| {
        -0.5 * ((x - mu) / sigma).powi(2) - (sigma * std::f64::consts::TAU.sqrt()).ln()
    };
    let g = |x: f64| {
        let lp = logn(x, f);
        lp.exp() * (lp - logn(x, l))
    };
    let mut s = g(a) + g(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(a + i as f64 * dx);
    }
    s * dx / 3.0
}

/// Largest gap between the closed-form per-step KL and quadrature.
pub fn kl_quadrature_error() -> f64 {
    let cases = [
        (0.0, 0.0, 1.0),
        (1.0, -0.5, 1.0),
        (-2.0, 1.5, 0.7),
        (0.3, 0.1, 2.5),
        (-0.4, -3.0, 1.3),
    ];
    cases
        .iter()
        .map(|&(f, l, s)| (per_step_kl(f, l, s) - kl_quadrature(f, l, s)).abs())
        .fold(0.0, f64::max)
}
