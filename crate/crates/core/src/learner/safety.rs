use super::config::{SafetyConfig, SafetyForm};
use super::sampler::{grad_q_logtrick, HoleSampler, SamplerGrad};
use super::LearnerError;
use crate::estimators::{empirical_safety_lhat, SafetySpec};

/// Result of one primal-dual safety step.
#[derive(Clone, Debug, PartialEq)]
pub struct SafetyUpdate {
    /// Score-function gradient of `-lambda * g(L_hat_c)`, to be scaled by `beta`.
    pub lagrangian: SamplerGrad,
    /// `(1/K) sum_k grad log q(l_k) L_con(l_k)` with `L_con = -violation`,
    /// to be scaled by `B`.
    pub penalty: SamplerGrad,
    pub lhat: f64,
    /// Multiplier after the projected dual step.
    pub lambda: f64,
}

/// The stand-in for `L_c(q) - alpha`, per program (its mean over programs
/// is the quantity itself).
fn surrogate(form: SafetyForm, unsafe_k: f64, alpha: f64) -> f64 {
    match form {
        SafetyForm::Verbatim => 1.0 - unsafe_k - alpha,
        SafetyForm::Direct => unsafe_k - alpha,
    }
}

/// One step on `min_q max_{lambda <= 0} L + lambda (L_c(q) - alpha)` in
/// ascent form for `q`. `ratios[k]` is the two-batch cost ratio of program
/// `k` and `violations[k]` its symbolic-constraint violation.
pub fn safety_train_step(
    sampler: &HoleSampler,
    samples: &[Vec<f64>],
    ratios: &[f64],
    violations: &[f64],
    spec: &SafetySpec,
    cfg: &SafetyConfig,
    lambda: f64,
) -> Result<SafetyUpdate, LearnerError> {
    spec.validate()?;
    let k = samples.len();
    if ratios.len() != k || violations.len() != k {
        return Err(LearnerError::Dimension {
            expected: k,
            found: ratios.len().min(violations.len()),
        });
    }
    let q = vec![1.0 / k as f64; k];
    let lhat = empirical_safety_lhat(ratios, &q, spec)?;
    // q minimises lambda * g, i.e. ascends -lambda * g
    let values: Vec<f64> = ratios
        .iter()
        .map(|r| {
            -lambda
                * surrogate(
                    cfg.form,
                    f64::from(u8::from(spec.flags_unsafe(*r))),
                    spec.alpha_conf,
                )
        })
        .collect();
    let lagrangian = grad_q_logtrick(sampler, samples, &values)?;
    let l_con: Vec<f64> = violations.iter().map(|v| -v).collect();
    let penalty = grad_q_logtrick(sampler, samples, &l_con)?;
    let g = surrogate(cfg.form, lhat, spec.alpha_conf);
    let lambda = (lambda + cfg.lambda_lr * g).min(0.0);
    Ok(SafetyUpdate {
        lagrangian,
        penalty,
        lhat,
        lambda,
    })
}
