//! Trajectories shared by the DSL, the environments and the estimators.

use crate::dsl::Token;
use serde::{Deserialize, Serialize};

/// One `(state, action)` pair. Indices are interpreted by the environment
/// that produced the trajectory.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub state: u32,
    pub action: u32,
}

impl Step {
    pub fn new(state: u32, action: u32) -> Self {
        Self { state, action }
    }
}

/// A finite trajectory together with the event token of every step and the
/// log-probability of its actions under the policy that generated it.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    steps: Vec<Step>,
    tokens: Vec<Token>,
    log_pi: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("trajectory has {steps} steps but {tokens} tokens")]
    LengthMismatch { steps: usize, tokens: usize },
    #[error("trajectory log-probability is not finite ({0})")]
    NonFiniteLogPi(f64),
}

impl Trajectory {
    pub fn new(steps: Vec<Step>, tokens: Vec<Token>, log_pi: f64) -> Result<Self, TrajectoryError> {
        if steps.len() != tokens.len() {
            return Err(TrajectoryError::LengthMismatch {
                steps: steps.len(),
                tokens: tokens.len(),
            });
        }
        if !log_pi.is_finite() {
            return Err(TrajectoryError::NonFiniteLogPi(log_pi));
        }
        Ok(Self {
            steps,
            tokens,
            log_pi,
        })
    }

    /// A token-only trajectory (every step is `(0, 0)`), handy when only the
    /// event stream matters.
    pub fn from_tokens(tokens: Vec<Token>, log_pi: f64) -> Result<Self, TrajectoryError> {
        let steps = vec![Step::new(0, 0); tokens.len()];
        Self::new(steps, tokens, log_pi)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn log_pi(&self) -> f64 {
        self.log_pi
    }

    /// The first `len` steps, with `log_pi` left unchanged.
    pub fn truncated(&self, len: usize) -> Trajectory {
        let len = len.min(self.len());
        Trajectory {
            steps: self.steps[..len].to_vec(),
            tokens: self.tokens[..len].to_vec(),
            log_pi: self.log_pi,
        }
    }

    /// Log of the likelihood ratio between the generating policy and the
    /// uniform action prior, `log pi_A(tau) - |tau| log(1/n_actions)`.
    pub fn log_policy_ratio(&self, n_actions: usize) -> f64 {
        self.log_pi + self.len() as f64 * (n_actions as f64).ln()
    }
}
