//! Explicit finite MDPs small enough to enumerate every trajectory.

use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{Env, Transition};
use crate::dsl::{Token, Vocabulary, VocabularyError};
use crate::policy::{sample_index, PolicyTable};
use crate::trajectory::{Step, Trajectory};

/// Default bound on `(n_states * n_actions)^horizon` for enumeration.
pub const DEFAULT_ENUMERATION_CAP: f64 = 1e7;

/// On-disk form of a [`TabularMdp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpSpec {
    /// `transition[s][a][s']`.
    pub transition: Vec<Vec<Vec<f64>>>,
    pub d0: Vec<f64>,
    /// Steps per episode (`T + 1`).
    pub horizon: usize,
    /// Per-step cost `costs[s][a]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<Vec<f64>>>,
    /// Event token `tokens[s][a]`; defaults to `s{s}_a{a}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<Vec<String>>>,
}

#[derive(Debug, thiserror::Error)]
pub enum MdpError {
    #[error("MDP needs at least one state and one action")]
    Empty,
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("{0} has the wrong shape")]
    Shape(&'static str),
    #[error("transition row ({s}, {a}) sums to {sum}")]
    RowSum { s: usize, a: usize, sum: f64 },
    #[error("initial distribution sums to {0}")]
    D0Sum(f64),
    #[error("negative or non-finite probability in {0}")]
    BadProbability(&'static str),
    #[error("enumerating (S*A)^horizon = {size:e} trajectories exceeds the cap {cap:e}")]
    CapExceeded { size: f64, cap: f64 },
    #[error("MDP has no cost table")]
    NoCosts,
    #[error(transparent)]
    Vocabulary(#[from] VocabularyError),
    #[error("bad MDP json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug)]
pub struct TabularMdp {
    spec: MdpSpec,
    n_states: usize,
    n_actions: usize,
    vocab: Arc<Vocabulary>,
    token_table: Vec<Token>,
}

const ROW_TOL: f64 = 1e-12;

impl TabularMdp {
    pub fn new(spec: MdpSpec) -> Result<Self, MdpError> {
        let n_states = spec.transition.len();
        let n_actions = spec.transition.first().map_or(0, Vec::len);
        if n_states == 0 || n_actions == 0 {
            return Err(MdpError::Empty);
        }
        if spec.horizon == 0 {
            return Err(MdpError::ZeroHorizon);
        }
        if spec.d0.len() != n_states {
            return Err(MdpError::Shape("d0"));
        }
        let ok_prob = |p: &f64| p.is_finite() && *p >= 0.0;
        for (s, rows) in spec.transition.iter().enumerate() {
            if rows.len() != n_actions {
                return Err(MdpError::Shape("transition"));
            }
            for (a, row) in rows.iter().enumerate() {
                if row.len() != n_states {
                    return Err(MdpError::Shape("transition"));
                }
                if !row.iter().all(ok_prob) {
                    return Err(MdpError::BadProbability("transition"));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOL {
                    return Err(MdpError::RowSum { s, a, sum });
                }
            }
        }
        if !spec.d0.iter().all(ok_prob) {
            return Err(MdpError::BadProbability("d0"));
        }
        let d0_sum: f64 = spec.d0.iter().sum();
        if (d0_sum - 1.0).abs() > ROW_TOL {
            return Err(MdpError::D0Sum(d0_sum));
        }
        fn shape_ok<T>(t: &[Vec<T>], n_states: usize, n_actions: usize) -> bool {
            t.len() == n_states && t.iter().all(|r| r.len() == n_actions)
        }
        if let Some(c) = &spec.costs {
            if !shape_ok(c, n_states, n_actions) || !c.iter().flatten().all(|x: &f64| x.is_finite())
            {
                return Err(MdpError::Shape("costs"));
            }
        }
        let names: Vec<Vec<String>> = match &spec.tokens {
            Some(t) if !shape_ok(t, n_states, n_actions) => return Err(MdpError::Shape("tokens")),
            Some(t) => t.clone(),
            None => (0..n_states)
                .map(|s| (0..n_actions).map(|a| format!("s{s}_a{a}")).collect())
                .collect(),
        };
        let mut distinct: Vec<&String> = Vec::new();
        for n in names.iter().flatten() {
            if !distinct.contains(&n) {
                distinct.push(n);
            }
        }
        let vocab = Arc::new(Vocabulary::new(distinct.iter().map(|s| s.as_str()))?);
        let token_table = names
            .iter()
            .flatten()
            .map(|n| vocab.lookup(n).expect("registered above"))
            .collect();
        Ok(Self {
            spec,
            n_states,
            n_actions,
            vocab,
            token_table,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.spec).expect("spec serialises")
    }

    /// A 3-state, 2-action, horizon-3 stochastic MDP with costs, used by
    /// the estimator tests and studies.
    pub fn toy_three_state() -> Self {
        Self::new(MdpSpec {
            transition: vec![
                vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.6, 0.3]],
                vec![vec![0.3, 0.3, 0.4], vec![0.5, 0.1, 0.4]],
                vec![vec![0.2, 0.5, 0.3], vec![0.0, 0.2, 0.8]],
            ],
            d0: vec![0.5, 0.3, 0.2],
            horizon: 3,
            costs: Some(vec![vec![0.0, 1.0], vec![0.5, 0.0], vec![2.0, 1.0]]),
            tokens: None,
        })
        .expect("toy MDP is valid")
    }

    pub fn spec(&self) -> &MdpSpec {
        &self.spec
    }

    pub fn token(&self, s: usize, a: usize) -> Token {
        self.token_table[s * self.n_actions + a]
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.spec.transition[s][a][next]
    }

    pub fn d0(&self) -> &[f64] {
        &self.spec.d0
    }

    pub fn has_costs(&self) -> bool {
        self.spec.costs.is_some()
    }

    /// `c(tau)`: summed per-step costs.
    pub fn cost(&self, tau: &Trajectory) -> Result<f64, MdpError> {
        let c = self.spec.costs.as_ref().ok_or(MdpError::NoCosts)?;
        Ok(tau
            .steps()
            .iter()
            .map(|st| c[st.state as usize][st.action as usize])
            .sum())
    }

    /// Largest possible `c(tau)`, from the per-step maxima.
    pub fn max_cost(&self) -> Result<f64, MdpError> {
        let c = self.spec.costs.as_ref().ok_or(MdpError::NoCosts)?;
        let per_step = c
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(per_step * self.spec.horizon as f64)
    }
}

impl Env for TabularMdp {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn reset(&self, rng: &mut dyn RngCore) -> u32 {
        sample_index(&self.spec.d0, rng) as u32
    }

    fn step(&self, state: u32, action: u32, rng: &mut dyn RngCore) -> Transition {
        let (s, a) = (state as usize, action as usize);
        let row = &self.spec.transition[s][a];
        let next = sample_index(row, rng);
        Transition {
            next: next as u32,
            token: self.token(s, a),
            done: false,
        }
    }
}

/// Every trajectory with nonzero dynamics probability, paired with
/// `p(tau) = d0(s0) * prod_t P(s_{t+1} | s_t, a_t)`. Actions carry no
/// probability here; under the uniform action prior a trajectory's mass is
/// `p(tau) * (1/n_actions)^len`.
///
/// `log_pi` is filled from `policy`, or with the uniform policy when absent.
pub fn enumerate_trajectories(
    mdp: &TabularMdp,
    policy: Option<&PolicyTable>,
    cap: f64,
) -> Result<Vec<(Trajectory, f64)>, MdpError> {
    let size = ((mdp.n_states * mdp.n_actions) as f64).powi(mdp.spec.horizon as i32);
    if size > cap {
        return Err(MdpError::CapExceeded { size, cap });
    }
    let uniform_lp = -(mdp.n_actions as f64).ln();
    let log_prob = |s: usize, a: usize| policy.map_or(uniform_lp, |p| p.log_prob(s, a));
    let mut out = Vec::new();
    let mut steps = Vec::with_capacity(mdp.spec.horizon);

    #[allow(clippy::too_many_arguments)]
    fn rec(
        mdp: &TabularMdp,
        log_prob: &dyn Fn(usize, usize) -> f64,
        s: usize,
        p: f64,
        lp: f64,
        steps: &mut Vec<Step>,
        out: &mut Vec<(Trajectory, f64)>,
    ) {
        for a in 0..mdp.n_actions {
            steps.push(Step::new(s as u32, a as u32));
            let lp = lp + log_prob(s, a);
            if steps.len() == mdp.spec.horizon {
                let tokens = steps
                    .iter()
                    .map(|st| mdp.token(st.state as usize, st.action as usize))
                    .collect();
                let t = Trajectory::new(steps.clone(), tokens, lp).expect("consistent");
                out.push((t, p));
            } else {
                for next in 0..mdp.n_states {
                    let q = mdp.prob(s, a, next);
                    if q > 0.0 {
                        rec(mdp, log_prob, next, p * q, lp, steps, out);
                    }
                }
            }
            steps.pop();
        }
    }

    for (s0, &p0) in mdp.spec.d0.iter().enumerate() {
        if p0 > 0.0 {
            rec(mdp, &log_prob, s0, p0, 0.0, &mut steps, &mut out);
        }
    }
    Ok(out)
}
