use crate::policy::PolicyTable;
use crate::trajectory::Trajectory;

use super::LearnerError;

/// Settings for the tabular actor-critic update.
#[derive(Clone, Debug, PartialEq)]
pub struct PgConfig {
    pub lr: f64,
    pub value_lr: f64,
    pub entropy_coef: f64,
    pub discount: f64,
    /// Advantages are divided by `max(running rms of returns, floor)`.
    /// Rewards far below the floor then give proportionally small steps,
    /// so an early, barely-trained program cannot lock the policy in.
    pub adv_scale_floor: f64,
}

/// Discounted returns `G_t = r_t + gamma G_{t+1}`.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut g = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        g[t] = acc;
    }
    g
}

/// Tabular state values plus a running scale of the returns.
#[derive(Clone, Debug, PartialEq)]
pub struct Critic {
    pub values: Vec<f64>,
    ret_sq: f64,
}

const SCALE_RATE: f64 = 0.05;

impl Critic {
    pub fn new(n_states: usize) -> Self {
        Self {
            values: vec![0.0; n_states],
            ret_sq: 0.0,
        }
    }

    /// Root of the running mean of squared returns.
    pub fn return_scale(&self) -> f64 {
        self.ret_sq.sqrt()
    }
}

/// One entropy-regularised policy-gradient step on discounted returns with
/// a tabular state-value baseline. Gradients go through the floor mixture,
/// so the floor itself is untouched.
pub fn policy_update(
    policy: &mut PolicyTable,
    critic: &mut Critic,
    batch: &[Trajectory],
    rewards: &[Vec<f64>],
    cfg: &PgConfig,
) -> Result<(), LearnerError> {
    if rewards.len() != batch.len() {
        return Err(LearnerError::Dimension {
            expected: batch.len(),
            found: rewards.len(),
        });
    }
    for (t, r) in batch.iter().zip(rewards) {
        if t.len() != r.len() {
            return Err(LearnerError::Dimension {
                expected: t.len(),
                found: r.len(),
            });
        }
    }
    if batch.is_empty() {
        return Ok(());
    }
    let n = policy.n_actions();
    let values = &mut critic.values;
    let mut adv = Vec::new();
    let mut returns = Vec::new();
    for (t, r) in batch.iter().zip(rewards) {
        let g = discounted_returns(r, cfg.discount);
        for (st, g) in t.steps().iter().zip(&g) {
            adv.push(g - values[st.state as usize]);
            returns.push(*g);
        }
    }
    let batch_sq = returns.iter().map(|g| g * g).sum::<f64>() / returns.len() as f64;
    critic.ret_sq = if critic.ret_sq == 0.0 {
        batch_sq
    } else {
        (1.0 - SCALE_RATE) * critic.ret_sq + SCALE_RATE * batch_sq
    };
    let scale = critic.ret_sq.sqrt().max(cfg.adv_scale_floor);
    if scale > 0.0 {
        adv.iter_mut().for_each(|a| *a /= scale);
    } else {
        adv.iter_mut().for_each(|a| *a = 0.0);
    }

    let keep = 1.0 - n as f64 * policy.eps_floor();
    let scale = 1.0 / batch.len() as f64;
    let mut grad = vec![0.0; policy.logits().len()];
    let steps = batch.iter().flat_map(|t| t.steps());
    for ((st, a), g) in steps.zip(&adv).zip(&returns) {
        let s = st.state as usize;
        let act = st.action as usize;
        let p = policy.softmax(s);
        let pi: Vec<f64> = p.iter().map(|x| keep * x + policy.eps_floor()).collect();
        // sum_a p_a log pi_a, for the entropy gradient
        let avg_log: f64 = p.iter().zip(&pi).map(|(p, q)| p * q.ln()).sum();
        let row = &mut grad[s * n..(s + 1) * n];
        for b in 0..n {
            let onehot = f64::from(u8::from(b == act));
            let dlogpi = keep * p[act] * (onehot - p[b]) / pi[act];
            let dent = -keep * p[b] * (pi[b].ln() - avg_log);
            row[b] += scale * (a * dlogpi + cfg.entropy_coef * dent);
        }
        critic.values[s] += cfg.value_lr * (g - critic.values[s]);
    }
    for (l, g) in policy.logits_mut().iter_mut().zip(&grad) {
        *l += cfg.lr * g;
    }
    Ok(())
}
