//! Partition functions, importance-sampling estimators with exact
//! enumeration oracles, and the concentration bounds that go with them.
//!
//! Importance weights are taken relative to the uniform action prior:
//! `w(tau) = exp(l(tau)) * (1/n)^|tau| / pi_A(tau)`, so that
//! `E_{tau ~ pi_A}[w] = Z_l` with `Z_l = sum_tau p(tau) (1/n)^|tau| exp(l(tau))`.
//! For a fixed horizon the factor `(1/n)^|tau|` is a constant and cancels in
//! every self-normalised ratio.

mod bounds;
mod exact;
mod report;
mod safety;
mod snis;

pub use crate::policy::PolicyTable;
pub use bounds::{proposition1_bound, relative_policy_floor, theorem1_interval, Theorem1};
pub use exact::{exact_expectation, exact_log_zl, exact_zl, max_total_reward, ExactOracle};
pub use report::{write_report, EstimateReport, ReportRow};
pub use safety::{cost_ratio, empirical_safety_lhat, exact_costs, exact_safety_lc, SafetySpec};
pub use snis::{
    log_sum_exp, log_weight, normalized_weights, snis_expectation, two_batch_estimate, TwoBatch,
};

#[derive(Debug, thiserror::Error)]
pub enum EstimatorError {
    #[error("batch is empty")]
    EmptyBatch,
    #[error("batches differ in size ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("hoeffding gamma must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("program weights sum to {0}, expected 1")]
    Unnormalized(f64),
    #[error("importance weight is not finite")]
    NonFinite,
    #[error(transparent)]
    Mdp(#[from] crate::env::MdpError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
