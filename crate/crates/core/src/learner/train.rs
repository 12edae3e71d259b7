use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Mode, TrainConfig};
use super::metrics::MetricsRow;
use super::objectives::{
    pooled_kl_d_log_z, program_terms, stochastic_objectives, Batches, ProgramTerms, TrajData,
};
use super::policy_grad::{policy_update, Critic, PgConfig};
use super::reward::RewardModel;
use super::safety::safety_train_step;
use super::sampler::{grad_q_logtrick, most_likely_program, HoleSampler, SamplerGrad};
use super::LearnerError;
use crate::constraint::{grad_soft_penalty, margin, soft_penalty, violation, Atom, Constraint};
use crate::dsl::{Program, Sketch};
use crate::env::{rollout, rollout_with_outcome, Env};
use crate::estimators::{log_sum_exp, SafetySpec};
use crate::policy::PolicyTable;
use crate::trajectory::Trajectory;

const ROLLOUT_STREAM: u64 = 1;
const PROGRAM_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;
const EVAL_STREAM: u64 = 4;
const POLISH_LIMIT: usize = 10_000;

/// Deterministic seed for item `index` of an RNG stream (splitmix64 mixing).
pub fn stream_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `|h_j| <= h_max` as conjunctive atoms.
pub fn box_atoms(n: usize, h_max: f64) -> Vec<Constraint> {
    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut c = vec![0.0; n];
            c[j] = sign;
            out.push(Constraint::Atom(Atom::new(c, -h_max)));
        }
    }
    out
}

/// Greedy-policy success rate over `episodes` episodes with seeds fixed by
/// `seed`.
pub fn evaluate(policy: &PolicyTable, env: &dyn Env, episodes: usize, seed: u64) -> f64 {
    if episodes == 0 {
        return 0.0;
    }
    let greedy = policy.greedy_policy();
    let wins = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, EVAL_STREAM, e as u64));
            usize::from(rollout_with_outcome(&greedy, env, &mut rng).1)
        })
        .sum::<usize>();
    wins as f64 / episodes as f64
}

pub struct TrainInputs<'a> {
    pub env: &'a dyn Env,
    pub sketch: &'a Sketch,
    /// Conjunctive constraint over the sketch's holes.
    pub constraint: &'a Constraint,
    pub demos: &'a [Trajectory],
    /// Trajectory cost, needed in safety mode.
    pub cost: Option<&'a (dyn Fn(&Trajectory) -> f64 + Sync)>,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub program: Program,
    pub policy: PolicyTable,
    pub sampler: HoleSampler,
    pub reward_model: RewardModel,
    pub metrics: Vec<MetricsRow>,
    pub frames: u64,
    pub lambda: f64,
    /// Greedy success rate of the returned policy.
    pub final_success: f64,
    /// Constraint-only steps needed to bring the final mean back inside the
    /// feasible set.
    pub polish_steps: usize,
}

pub fn train(cfg: &TrainConfig, inputs: &TrainInputs<'_>) -> Result<TrainOutput, LearnerError> {
    train_with(cfg, inputs, &mut |_| {})
}

fn clip_norm(v: &mut [f64], max: f64) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > max {
        v.iter_mut().for_each(|x| *x *= max / n);
    }
}

fn check(x: f64, iter: usize, what: &'static str) -> Result<f64, LearnerError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(LearnerError::NonFinite { iter, what })
    }
}

/// Two-batch cost ratio from precomputed totals `l(tau)`, log-ratios and costs.
fn cost_ratio(agent: &[TrajData], totals: &[f64], costs: &[f64]) -> f64 {
    let half = agent.len() / 2;
    let lw: Vec<f64> = agent
        .iter()
        .zip(totals)
        .map(|(t, l)| l - t.log_ratio)
        .collect();
    let shift = log_sum_exp(lw[..2 * half].iter().copied());
    let num: f64 = (0..half).map(|i| (lw[i] - shift).exp() * costs[i]).sum();
    let den: f64 = (half..2 * half).map(|j| (lw[j] - shift).exp()).sum();
    num / den
}

/// [`train`] with a callback receiving every metrics row as it is produced.
pub fn train_with(
    cfg: &TrainConfig,
    inputs: &TrainInputs<'_>,
    on_row: &mut dyn FnMut(&MetricsRow),
) -> Result<TrainOutput, LearnerError> {
    cfg.validate()?;
    let env = inputs.env;
    let sketch = inputs.sketch;
    let n_holes = sketch.n_holes();
    if inputs.demos.is_empty() {
        return Err(LearnerError::EmptyBatch);
    }
    if inputs.constraint.max_hole() > n_holes {
        return Err(LearnerError::Dimension {
            expected: n_holes,
            found: inputs.constraint.max_hole(),
        });
    }
    let constraint = inputs.constraint.padded(n_holes);
    let appendix = matches!(cfg.mode, Mode::Soft | Mode::Hard | Mode::Safety);
    let penalised = if appendix {
        let mut cs = vec![constraint.clone()];
        cs.extend(box_atoms(n_holes, cfg.h_max));
        Constraint::and(cs)
    } else {
        constraint.clone()
    };
    soft_penalty(&penalised, &vec![0.0; n_holes])?;
    let safety_spec = if cfg.mode == Mode::Safety {
        if inputs.cost.is_none() {
            return Err(LearnerError::MissingCost);
        }
        let s = &cfg.safety;
        Some(SafetySpec::new(s.d, s.kappa, s.c_bar, s.alpha_conf)?)
    } else {
        None
    };

    let (n_states, n_actions) = (env.n_states(), env.n_actions());
    let mut sampler = HoleSampler::new(n_holes);
    let mut model = RewardModel::new(n_states, n_actions);
    let mut policy = PolicyTable::uniform(n_states, n_actions, cfg.eps_floor)?;
    let mut critic = Critic::new(n_states);
    let pg = PgConfig {
        lr: cfg.policy_lr,
        value_lr: cfg.value_lr,
        entropy_coef: cfg.entropy_coef,
        discount: cfg.discount_gamma,
        adv_scale_floor: cfg.adv_scale_floor,
    };
    let mut batches = Batches {
        agent: Vec::new(),
        demos: inputs
            .demos
            .iter()
            .map(|t| TrajData::new(sketch, t, n_actions))
            .collect(),
    };
    let mut frames = 0u64;
    let mut lambda = 0.0;
    let mut rows: Vec<MetricsRow> = Vec::new();
    let horizon = env.horizon() as u64;

    for iter in 0..cfg.n_iter {
        if cfg.max_frames > 0 && frames + cfg.m as u64 * horizon > cfg.max_frames {
            break;
        }
        // rollouts under the current policy
        let agent: Vec<Trajectory> = (0..cfg.m)
            .into_par_iter()
            .map(|j| {
                let idx = (iter as u64) << 32 | j as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, ROLLOUT_STREAM, idx));
                rollout(&policy, env, &mut rng)
            })
            .collect();
        frames += agent.iter().map(|t| t.len() as u64).sum::<u64>();
        batches.agent = agent
            .iter()
            .map(|t| TrajData::new(sketch, t, n_actions))
            .collect();
        batches.refresh(&model, &policy);

        // policy step on the most likely program
        let mean = sampler.mean.clone();
        let rewards: Vec<Vec<f64>> = batches
            .agent
            .iter()
            .map(|t| t.residual.apply(&mean))
            .collect::<Result<_, _>>()?;
        policy_update(&mut policy, &mut critic, &agent, &rewards, &pg)?;

        // program samples
        let mut prng =
            ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, PROGRAM_STREAM, iter as u64));
        let samples: Vec<Vec<f64>> = (0..cfg.k).map(|_| sampler.sample(&mut prng)).collect();
        let log_z = sampler.log_z_hat;
        let want_f = cfg.mode == Mode::Standard;
        let per: Vec<(ProgramTerms, Option<Vec<f64>>)> = samples
            .par_iter()
            .map(|h| {
                let mut g = want_f.then(|| vec![0.0; n_states * n_actions]);
                let t = program_terms(&batches, h, log_z, &model, g.as_deref_mut())?;
                Ok((t, g))
            })
            .collect::<Result<_, LearnerError>>()?;
        let kf = cfg.k as f64;
        let j_gen = per.iter().map(|p| p.0.j_gen).sum::<f64>() / kf;
        let j_adv = per.iter().map(|p| p.0.j_adv).sum::<f64>() / kf;

        let entropy = sampler.entropy();
        let j_c = -cfg.eta * soft_penalty(&penalised, &mean)?;
        let mut f_grad = vec![0.0; n_states * n_actions];
        let (prog_values, d_log_z, elbo) = if want_f {
            for (_, g) in &per {
                for (a, b) in f_grad.iter_mut().zip(g.as_ref().expect("requested")) {
                    *a += b / kf;
                }
            }
            let vals: Vec<f64> = per.iter().map(|p| p.0.j_gen).collect();
            let dz = per.iter().map(|p| p.0.d_log_z).sum::<f64>() / kf;
            (vals, dz, entropy + j_c + j_gen)
        } else {
            let mut nrng =
                ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, NOISE_STREAM, iter as u64));
            let soft = cfg.mode != Mode::Hard;
            let st = stochastic_objectives(
                &samples,
                &batches,
                log_z,
                &model,
                cfg.sigma,
                cfg.noise_draws,
                &mut nrng,
                Some((&mut f_grad, soft)),
            )?;
            let vals: Vec<f64> = st.kl.iter().map(|kl| -kl).collect();
            let dz = samples
                .iter()
                .map(|h| pooled_kl_d_log_z(&batches, h, log_z, cfg.sigma))
                .sum::<f64>()
                / kf;
            let bound = if soft {
                st.neg_l_soft(entropy)
            } else {
                st.neg_l_hard(entropy)
            };
            (vals, dz, bound + j_c)
        };
        let margin_now = margin(&constraint, &mean)?;
        check(j_gen, iter, "J_gen")?;
        check(j_adv, iter, "j_adv")?;
        check(elbo, iter, "elbo")?;
        check(d_log_z, iter, "log z_hat gradient")?;

        // sampler step
        let mut g = grad_q_logtrick(&sampler, &samples, &prog_values)?;
        g.log_var.iter_mut().for_each(|x| *x += 0.5);
        for (gm, gc) in g.mean.iter_mut().zip(grad_soft_penalty(&penalised, &mean)?) {
            *gm -= cfg.eta * gc;
        }
        let mut step = SamplerGrad::zeros(n_holes);
        step.add_scaled(&g, cfg.beta);
        if let Some(spec) = &safety_spec {
            let cost = inputs.cost.expect("checked above");
            let costs: Vec<f64> = agent.iter().map(cost).collect();
            let mut ratios = Vec::with_capacity(cfg.k);
            let mut viol = Vec::with_capacity(cfg.k);
            for h in &samples {
                let totals: Vec<f64> = batches.agent.iter().map(|t| t.residual.total(h)).collect();
                ratios.push(cost_ratio(&batches.agent, &totals, &costs));
                viol.push(violation(&constraint, h)?);
            }
            let up = safety_train_step(
                &sampler,
                &samples,
                &ratios,
                &viol,
                spec,
                &cfg.safety,
                lambda,
            )?;
            step.add_scaled(&up.lagrangian, cfg.beta);
            step.add_scaled(&up.penalty, cfg.safety.b);
            lambda = up.lambda;
        }
        if !step.is_finite() {
            return Err(LearnerError::NonFinite {
                iter,
                what: "sampler gradient",
            });
        }
        clip_norm(&mut step.mean, cfg.max_mean_step);
        for (m, d) in sampler.mean.iter_mut().zip(&step.mean) {
            *m += d;
        }
        for (lv, d) in sampler.log_var.iter_mut().zip(&step.log_var) {
            *lv = (*lv + d).clamp(cfg.log_var_min, cfg.log_var_max);
        }
        sampler.log_z_hat += (cfg.beta * d_log_z).clamp(-cfg.max_mean_step, cfg.max_mean_step);
        model.ascend(&f_grad, cfg.alpha);
        if !model.is_finite() {
            return Err(LearnerError::NonFinite {
                iter,
                what: "reward model",
            });
        }

        let eval_success = ((iter + 1) % cfg.eval_every == 0)
            .then(|| evaluate(&policy, env, cfg.eval_episodes, cfg.seed));
        let row = MetricsRow {
            iter,
            elbo,
            h: entropy,
            j_c,
            j_gen,
            j_adv,
            constraint_margin: margin_now,
            eval_success,
            frames,
        };
        on_row(&row);
        rows.push(row);
        if cfg.stop_success > 0.0 && eval_success.is_some_and(|s| s >= cfg.stop_success) {
            break;
        }
    }

    let final_success = match rows.last() {
        Some(MetricsRow {
            eval_success: Some(s),
            ..
        }) => *s,
        _ => evaluate(&policy, env, cfg.eval_episodes, cfg.seed),
    };

    // a last iteration may leave the mean just outside the feasible set
    let mut polish_steps = 0;
    while violation(&constraint, &sampler.mean)? > 0.0 && polish_steps < POLISH_LIMIT {
        let mut d: Vec<f64> = grad_soft_penalty(&constraint, &sampler.mean)?
            .iter()
            .map(|g| -cfg.beta * cfg.eta * g)
            .collect();
        clip_norm(&mut d, cfg.max_mean_step);
        for (m, x) in sampler.mean.iter_mut().zip(&d) {
            *m += x;
        }
        polish_steps += 1;
    }

    let program = most_likely_program(&sampler, sketch)?;
    Ok(TrainOutput {
        program,
        policy,
        sampler,
        reward_model: model,
        metrics: rows,
        frames,
        lambda,
        final_success,
        polish_steps,
    })
}
