//! Tabular stochastic policies with a positivity floor.

use rand::{Rng, RngCore};

/// Anything that picks an action in a state and reports its log-probability.
pub trait Policy: Sync {
    fn act(&self, state: u32, rng: &mut dyn RngCore) -> (u32, f64);
}

/// Softmax over per-state logits, mixed with a uniform floor:
/// `pi(a|s) = (1 - n * eps) * softmax(logits[s])[a] + eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyTable {
    n_states: usize,
    n_actions: usize,
    logits: Vec<f64>,
    eps_floor: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("floor {eps} must lie in [0, 1/{n_actions})")]
    BadFloor { eps: f64, n_actions: usize },
    #[error("policy needs at least one state and one action")]
    Empty,
    #[error("expected {expected} logits, got {found}")]
    Shape { expected: usize, found: usize },
}

impl PolicyTable {
    /// Uniform policy (all logits zero).
    pub fn uniform(n_states: usize, n_actions: usize, eps_floor: f64) -> Result<Self, PolicyError> {
        Self::from_logits(
            n_states,
            n_actions,
            vec![0.0; n_states * n_actions],
            eps_floor,
        )
    }

    pub fn from_logits(
        n_states: usize,
        n_actions: usize,
        logits: Vec<f64>,
        eps_floor: f64,
    ) -> Result<Self, PolicyError> {
        if n_states == 0 || n_actions == 0 {
            return Err(PolicyError::Empty);
        }
        if !(0.0..1.0 / n_actions as f64).contains(&eps_floor) {
            return Err(PolicyError::BadFloor {
                eps: eps_floor,
                n_actions,
            });
        }
        if logits.len() != n_states * n_actions {
            return Err(PolicyError::Shape {
                expected: n_states * n_actions,
                found: logits.len(),
            });
        }
        Ok(Self {
            n_states,
            n_actions,
            logits,
            eps_floor,
        })
    }

    /// The default floor, `0.01 / n_actions`.
    pub fn default_floor(n_actions: usize) -> f64 {
        0.01 / n_actions as f64
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn eps_floor(&self) -> f64 {
        self.eps_floor
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    pub fn state_logits(&self, s: usize) -> &[f64] {
        &self.logits[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// Plain softmax of the logits, without the floor.
    pub fn softmax(&self, s: usize) -> Vec<f64> {
        let row = self.state_logits(s);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }

    pub fn probs(&self, s: usize) -> Vec<f64> {
        let keep = 1.0 - self.n_actions as f64 * self.eps_floor;
        self.softmax(s)
            .into_iter()
            .map(|p| keep * p + self.eps_floor)
            .collect()
    }

    pub fn log_prob(&self, s: usize, a: usize) -> f64 {
        self.probs(s)[a].ln()
    }

    /// Smallest action probability any state can have.
    pub fn min_prob(&self) -> f64 {
        (0..self.n_states)
            .flat_map(|s| self.probs(s))
            .fold(f64::INFINITY, f64::min)
    }

    /// Highest-logit action, lowest index on ties.
    pub fn greedy(&self, s: usize) -> u32 {
        let row = self.state_logits(s);
        let mut best = 0;
        for (a, l) in row.iter().enumerate() {
            if *l > row[best] {
                best = a;
            }
        }
        best as u32
    }

    pub fn greedy_policy(&self) -> GreedyPolicy<'_> {
        GreedyPolicy(self)
    }
}

pub(crate) fn sample_index(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left a sliver above the last cumulative value
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

impl Policy for PolicyTable {
    fn act(&self, state: u32, rng: &mut dyn RngCore) -> (u32, f64) {
        let probs = self.probs(state as usize);
        let a = sample_index(&probs, rng);
        (a as u32, probs[a].ln())
    }
}

/// Deterministic argmax view of a [`PolicyTable`]; log-probability 0.
pub struct GreedyPolicy<'a>(&'a PolicyTable);

impl Policy for GreedyPolicy<'_> {
    fn act(&self, state: u32, _rng: &mut dyn RngCore) -> (u32, f64) {
        (self.0.greedy(state as usize), 0.0)
    }
}

/// Uniform over `n` actions.
pub struct UniformPolicy(pub usize);

impl Policy for UniformPolicy {
    fn act(&self, _state: u32, rng: &mut dyn RngCore) -> (u32, f64) {
        let a = rng.gen_range(0..self.0);
        (a as u32, -(self.0 as f64).ln())
    }
}
