//! Adversarial search for hole assignments: a Gaussian sampler over the
//! holes, a tabular discriminator reward and a tabular policy, trained
//! together from demonstrations.

mod config;
mod metrics;
mod objectives;
mod policy_grad;
mod reward;
mod safety;
mod sampler;
mod train;

pub use config::{Mode, SafetyConfig, SafetyForm, TrainConfig};
pub use metrics::{write_metrics, MetricsRow, METRICS_HEADER};
pub use objectives::{
    j_adv, j_gen, log_confidence_agent, log_confidence_expert, per_step_kl, program_terms,
    stochastic_objectives, Batches, ProgramTerms, StochasticTerms, TrajData,
};
pub use policy_grad::{discounted_returns, policy_update, Critic, PgConfig};
pub use reward::RewardModel;
pub use safety::{safety_train_step, SafetyUpdate};
pub use sampler::{grad_q_logtrick, most_likely_program, HoleSampler, SamplerGrad};
pub use train::{box_atoms, evaluate, stream_seed, train, train_with, TrainInputs, TrainOutput};

#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Kv(#[from] crate::kv::KvError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("need at least 2 program samples, got {0}")]
    TooFewSamples(usize),
    #[error("agent and demonstration batches must be non-empty")]
    EmptyBatch,
    #[error("safety mode needs an environment with per-step costs")]
    MissingCost,
    #[error("iteration {iter}: {what} is not finite")]
    NonFinite { iter: usize, what: &'static str },
    #[error(transparent)]
    Dsl(#[from] crate::dsl::DslError),
    #[error(transparent)]
    Constraint(#[from] crate::constraint::ConstraintError),
    #[error(transparent)]
    Estimator(#[from] crate::estimators::EstimatorError),
    #[error(transparent)]
    Policy(#[from] crate::policy::PolicyError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
