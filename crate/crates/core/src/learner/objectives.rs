use rand::RngCore;
use rand_distr::{Distribution, Normal};

use super::reward::RewardModel;
use super::LearnerError;
use crate::constraint::sigmoid;
use crate::dsl::{ResidualProgram, Sketch};
use crate::estimators::normalized_weights;
use crate::policy::PolicyTable;
use crate::trajectory::{Step, Trajectory};

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Everything the objectives need about one trajectory. `f` and
/// `log_pi_steps` follow the current reward model and policy and are
/// refreshed with [`TrajData::refresh`].
#[derive(Clone, Debug)]
pub struct TrajData {
    pub residual: ResidualProgram,
    pub steps: Vec<Step>,
    /// `log pi_A(tau) + |tau| log n`, the log-ratio against the uniform prior.
    pub log_ratio: f64,
    pub f: Vec<f64>,
    pub log_pi_steps: Vec<f64>,
}

impl TrajData {
    pub fn new(sketch: &Sketch, tau: &Trajectory, n_actions: usize) -> Self {
        Self {
            residual: sketch.partial_eval_tokens(tau.tokens()),
            steps: tau.steps().to_vec(),
            log_ratio: tau.log_policy_ratio(n_actions),
            f: vec![0.0; tau.len()],
            log_pi_steps: vec![0.0; tau.len()],
        }
    }

    pub fn refresh(&mut self, model: &RewardModel, policy: &PolicyTable) {
        self.f = model.f_steps(&self.steps);
        self.log_pi_steps = self
            .steps
            .iter()
            .map(|s| policy.log_prob(s.state as usize, s.action as usize))
            .collect();
    }

    /// `[[l]](tau)[t] - log z_hat` for every step.
    pub fn shifted(&self, h: &[f64], log_z: f64) -> Vec<f64> {
        self.residual
            .per_step()
            .iter()
            .map(|r| r.apply(h) - log_z)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Agent and demonstration trajectories for one iteration.
#[derive(Clone, Debug)]
pub struct Batches {
    pub agent: Vec<TrajData>,
    pub demos: Vec<TrajData>,
}

impl Batches {
    fn check(&self) -> Result<(), LearnerError> {
        if self.agent.is_empty() || self.demos.is_empty() {
            return Err(LearnerError::EmptyBatch);
        }
        Ok(())
    }

    pub fn refresh(&mut self, model: &RewardModel, policy: &PolicyTable) {
        for t in self.agent.iter_mut().chain(self.demos.iter_mut()) {
            t.refresh(model, policy);
        }
    }
}

/// `log p(1_A | tau; l, f) = sum_t [f_t - logaddexp(f_t, l_t)]`.
pub fn log_confidence_agent(l: &[f64], f: &[f64]) -> f64 {
    l.iter().zip(f).map(|(l, f)| f - log_add_exp(*f, *l)).sum()
}

/// `log p(0_E | tau; l, f) = sum_t [l_t - logaddexp(f_t, l_t)]`.
pub fn log_confidence_expert(l: &[f64], f: &[f64]) -> f64 {
    l.iter().zip(f).map(|(l, f)| l - log_add_exp(*f, *l)).sum()
}

/// Self-normalised weights of the agent batch under shifted rewards.
fn agent_weights(agent: &[TrajData], shifted: &[Vec<f64>]) -> Vec<f64> {
    let lw: Vec<f64> = agent
        .iter()
        .zip(shifted)
        .map(|(t, l)| l.iter().sum::<f64>() - t.log_ratio)
        .collect();
    normalized_weights(&lw)
}

/// Generator and discriminator values for one program.
#[derive(Clone, Debug, PartialEq)]
pub struct ProgramTerms {
    pub j_gen: f64,
    pub j_adv: f64,
    /// `d j_gen / d log z_hat`, counting the change in the weights.
    pub d_log_z: f64,
}

/// Evaluates both objectives for one hole assignment. When `f_grad` is
/// given, `grad_scores j_adv` is added into it.
pub fn program_terms(
    batches: &Batches,
    h: &[f64],
    log_z: f64,
    model: &RewardModel,
    f_grad: Option<&mut [f64]>,
) -> Result<ProgramTerms, LearnerError> {
    batches.check()?;
    let agent_l: Vec<Vec<f64>> = batches.agent.iter().map(|t| t.shifted(h, log_z)).collect();
    let w = agent_weights(&batches.agent, &agent_l);
    let n_demo = batches.demos.len() as f64;

    let mut gen_agent = 0.0;
    let mut adv_agent = 0.0;
    let mut mean_len = 0.0;
    for ((t, l), wi) in batches.agent.iter().zip(&agent_l).zip(&w) {
        gen_agent += wi * log_confidence_agent(l, &t.f);
        adv_agent += wi * log_confidence_expert(l, &t.f);
        mean_len += wi * t.len() as f64;
    }
    // d/dz: the weights move with -|tau|, each step's l' with -1
    let mut d_log_z = 0.0;
    for ((t, l), wi) in batches.agent.iter().zip(&agent_l).zip(&w) {
        let g = log_confidence_agent(l, &t.f);
        let dg: f64 = l.iter().zip(&t.f).map(|(l, f)| sigmoid(l - f)).sum();
        d_log_z += wi * ((mean_len - t.len() as f64) * g + dg);
    }
    let mut gen_demo = 0.0;
    let mut adv_demo = 0.0;
    let demo_l: Vec<Vec<f64>> = batches.demos.iter().map(|t| t.shifted(h, log_z)).collect();
    for (t, l) in batches.demos.iter().zip(&demo_l) {
        gen_demo += log_confidence_expert(l, &t.f) / n_demo;
        adv_demo += log_confidence_agent(l, &t.f) / n_demo;
        d_log_z -= l.iter().zip(&t.f).map(|(l, f)| sigmoid(f - l)).sum::<f64>() / n_demo;
    }

    if let Some(grad) = f_grad {
        // j_adv = SNIS_agent[log p(0_A)] + mean_demo[log p(1_E)]
        for ((t, l), wi) in batches.agent.iter().zip(&agent_l).zip(&w) {
            for ((st, l), f) in t.steps.iter().zip(l).zip(&t.f) {
                model.accumulate_grad(
                    grad,
                    st.state as usize,
                    st.action as usize,
                    -wi * sigmoid(f - l),
                );
            }
        }
        for (t, l) in batches.demos.iter().zip(&demo_l) {
            for ((st, l), f) in t.steps.iter().zip(l).zip(&t.f) {
                model.accumulate_grad(
                    grad,
                    st.state as usize,
                    st.action as usize,
                    sigmoid(l - f) / n_demo,
                );
            }
        }
    }

    Ok(ProgramTerms {
        j_gen: gen_agent + gen_demo,
        j_adv: adv_agent + adv_demo,
        d_log_z,
    })
}

/// `J_gen` averaged over the sampled programs.
pub fn j_gen(
    samples: &[Vec<f64>],
    batches: &Batches,
    log_z: f64,
    model: &RewardModel,
) -> Result<f64, LearnerError> {
    mean_over(samples, |h| {
        Ok(program_terms(batches, h, log_z, model, None)?.j_gen)
    })
}

/// `J_adv` averaged over the sampled programs.
pub fn j_adv(
    samples: &[Vec<f64>],
    batches: &Batches,
    log_z: f64,
    model: &RewardModel,
) -> Result<f64, LearnerError> {
    mean_over(samples, |h| {
        Ok(program_terms(batches, h, log_z, model, None)?.j_adv)
    })
}

fn mean_over(
    samples: &[Vec<f64>],
    f: impl Fn(&[f64]) -> Result<f64, LearnerError>,
) -> Result<f64, LearnerError> {
    if samples.is_empty() {
        return Err(LearnerError::TooFewSamples(0));
    }
    let mut s = 0.0;
    for h in samples {
        s += f(h)?;
    }
    Ok(s / samples.len() as f64)
}

/// `KL(N(f, s^2) || N(l, s^2)) = (f - l)^2 / (2 s^2)`.
pub fn per_step_kl(f: f64, l: f64, sigma: f64) -> f64 {
    (f - l).powi(2) / (2.0 * sigma * sigma)
}

/// Policy-based discriminator with `D = exp(f) / (exp(f) + pi_A)` per step:
/// mean over the agent batch of `log p(0_A)` plus the mean over demos of
/// `log p(1_E)`. `noise[i]` perturbs `f` on trajectory `i` (agent first,
/// then demos). The score gradient is added into `f_grad`, scaled by `k`.
fn disc_objective(
    batches: &Batches,
    noise: Option<&[Vec<f64>]>,
    model: &RewardModel,
    mut f_grad: Option<&mut [f64]>,
    k: f64,
) -> f64 {
    let n_agent = batches.agent.len() as f64;
    let n_demo = batches.demos.len() as f64;
    let mut j = 0.0;
    let all = batches
        .agent
        .iter()
        .map(|t| (t, true))
        .chain(batches.demos.iter().map(|t| (t, false)));
    for (i, (t, is_agent)) in all.enumerate() {
        let norm = if is_agent { n_agent } else { n_demo };
        for (s, ((st, f), lp)) in t.steps.iter().zip(&t.f).zip(&t.log_pi_steps).enumerate() {
            let fe = f + noise.map_or(0.0, |n| n[i][s]);
            let lae = log_add_exp(fe, *lp);
            let (v, d) = if is_agent {
                (lp - lae, -sigmoid(fe - lp))
            } else {
                (fe - lae, sigmoid(lp - fe))
            };
            j += v / norm;
            if let Some(g) = f_grad.as_deref_mut() {
                model.accumulate_grad(g, st.state as usize, st.action as usize, k * d / norm);
            }
        }
    }
    j
}

/// Values of the stochastic-reward bounds for a set of sampled programs.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticTerms {
    /// Monte-Carlo `E_eps[J(f + eps)]`.
    pub j_noisy: f64,
    /// Noiseless `J(f)`.
    pub j_clean: f64,
    /// Per program, the pooled mean of `sum_t (f_t - l_t)^2 / (2 sigma^2)`.
    pub kl: Vec<f64>,
    /// Pooled mean of `|tau| ln(2 pi sigma^2) / 2`.
    pub log_norm: f64,
}

impl StochasticTerms {
    /// `L_f(l_k) = E_eps[J(f + eps)] - E_tau[KL]`.
    pub fn l_f(&self, k: usize) -> f64 {
        self.j_noisy - self.kl[k]
    }

    /// `-L_soft` given the sampler entropy (the uniform box prior only adds a
    /// constant inside the box).
    pub fn neg_l_soft(&self, entropy: f64) -> f64 {
        entropy + (0..self.kl.len()).map(|k| self.l_f(k)).sum::<f64>() / self.kl.len() as f64
    }

    /// `-L_hard`: noiseless `J(f)` plus `E[log p(f(tau) | tau; l)]`.
    pub fn neg_l_hard(&self, entropy: f64) -> f64 {
        let lp = self.kl.iter().map(|kl| -kl - self.log_norm).sum::<f64>() / self.kl.len() as f64;
        entropy + self.j_clean + lp
    }
}

pub(crate) fn pooled_kl(batches: &Batches, h: &[f64], log_z: f64, sigma: f64) -> f64 {
    let n = (batches.agent.len() + batches.demos.len()) as f64;
    batches
        .agent
        .iter()
        .chain(&batches.demos)
        .map(|t| {
            t.shifted(h, log_z)
                .iter()
                .zip(&t.f)
                .map(|(l, f)| per_step_kl(*f, *l, sigma))
                .sum::<f64>()
        })
        .sum::<f64>()
        / n
}

/// `d/d log z_hat` of `-pooled_kl`.
pub(crate) fn pooled_kl_d_log_z(batches: &Batches, h: &[f64], log_z: f64, sigma: f64) -> f64 {
    let n = (batches.agent.len() + batches.demos.len()) as f64;
    batches
        .agent
        .iter()
        .chain(&batches.demos)
        .map(|t| {
            t.shifted(h, log_z)
                .iter()
                .zip(&t.f)
                .map(|(l, f)| -(f - l) / (sigma * sigma))
                .sum::<f64>()
        })
        .sum::<f64>()
        / n
}

/// Evaluates the soft and hard bounds for `samples` and, when `f_grad` is
/// given, adds the score gradient of the `f` objective of `mode_soft`
/// (soft: `E_eps J(f+eps) - E_k KL`; hard: `J(f) + E_k log p(f|l_k)`).
#[allow(clippy::too_many_arguments)]
pub fn stochastic_objectives(
    samples: &[Vec<f64>],
    batches: &Batches,
    log_z: f64,
    model: &RewardModel,
    sigma: f64,
    noise_draws: usize,
    rng: &mut dyn RngCore,
    f_grad: Option<(&mut [f64], bool)>,
) -> Result<StochasticTerms, LearnerError> {
    if !(sigma > 0.0) {
        return Err(LearnerError::Config(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    batches.check()?;
    if samples.is_empty() || noise_draws == 0 {
        return Err(LearnerError::TooFewSamples(0));
    }
    let normal = Normal::new(0.0, sigma).expect("sigma checked");
    let (mut grad, soft) = match f_grad {
        Some((g, soft)) => (Some(g), soft),
        None => (None, false),
    };
    let pool: Vec<&TrajData> = batches.agent.iter().chain(&batches.demos).collect();
    let mut j_noisy = 0.0;
    for _ in 0..noise_draws {
        let noise: Vec<Vec<f64>> = pool
            .iter()
            .map(|t| (0..t.len()).map(|_| normal.sample(rng)).collect())
            .collect();
        let g = if soft { grad.as_deref_mut() } else { None };
        j_noisy += disc_objective(batches, Some(&noise), model, g, 1.0 / noise_draws as f64);
    }
    j_noisy /= noise_draws as f64;
    let g = if soft { None } else { grad.as_deref_mut() };
    let j_clean = disc_objective(batches, None, model, g, 1.0);

    let n_pool = pool.len() as f64;
    let kl: Vec<f64> = samples
        .iter()
        .map(|h| pooled_kl(batches, h, log_z, sigma))
        .collect();
    if let Some(g) = grad {
        // d/df of -E_k E_tau KL, identical in both modes
        let k = samples.len() as f64;
        for h in samples {
            for t in &pool {
                for ((st, l), f) in t.steps.iter().zip(t.shifted(h, log_z)).zip(&t.f) {
                    let d = -(f - l) / (sigma * sigma) / (n_pool * k);
                    model.accumulate_grad(g, st.state as usize, st.action as usize, d);
                }
            }
        }
    }
    let log_norm = pool.iter().map(|t| t.len() as f64).sum::<f64>() / n_pool
        * 0.5
        * (std::f64::consts::TAU * sigma * sigma).ln();
    Ok(StochasticTerms {
        j_noisy,
        j_clean,
        kl,
        log_norm,
    })
}
