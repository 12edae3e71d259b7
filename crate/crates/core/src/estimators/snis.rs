use super::{EstimateReport, EstimatorError};
use crate::trajectory::Trajectory;

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `log w = l(tau) - log pi_A(tau) - |tau| log n`.
pub fn log_weight(tau: &Trajectory, l: f64, n_actions: usize) -> f64 {
    l - tau.log_policy_ratio(n_actions)
}

/// Self-normalised weights from log-weights.
pub fn normalized_weights(log_w: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(log_w.iter().copied());
    log_w.iter().map(|lw| (lw - lse).exp()).collect()
}

/// `sum_i w_i v(tau_i) / sum_i w_i` over one batch, in the log domain.
pub fn snis_expectation(
    batch: &[Trajectory],
    n_actions: usize,
    l: impl Fn(&Trajectory) -> f64,
    v: impl Fn(&Trajectory) -> f64,
) -> Result<EstimateReport, EstimatorError> {
    if batch.is_empty() {
        return Err(EstimatorError::EmptyBatch);
    }
    let log_w: Vec<f64> = batch
        .iter()
        .map(|t| log_weight(t, l(t), n_actions))
        .collect();
    if log_w.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
        return Err(EstimatorError::NonFinite);
    }
    let w = normalized_weights(&log_w);
    let estimate = w.iter().zip(batch).map(|(w, t)| w * v(t)).sum();
    Ok(EstimateReport::new(estimate, batch.len()))
}

/// Two-batch estimate: numerator from `batch_i`, denominator from
/// `batch_j`. The per-batch means are unbiased for `Z_l J` and `Z_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoBatch {
    /// `(1/m) sum_i w_i v(tau_i)`.
    pub numerator: f64,
    /// `(1/m) sum_j w_j`.
    pub denominator: f64,
    pub estimate: f64,
    pub m: usize,
}

pub fn two_batch_estimate(
    batch_i: &[Trajectory],
    batch_j: &[Trajectory],
    n_actions: usize,
    l: impl Fn(&Trajectory) -> f64,
    v: impl Fn(&Trajectory) -> f64,
) -> Result<TwoBatch, EstimatorError> {
    if batch_i.is_empty() || batch_j.is_empty() {
        return Err(EstimatorError::EmptyBatch);
    }
    if batch_i.len() != batch_j.len() {
        return Err(EstimatorError::SizeMismatch(batch_i.len(), batch_j.len()));
    }
    let m = batch_i.len() as f64;
    let w = |t: &Trajectory| log_weight(t, l(t), n_actions).exp();
    let numerator = batch_i.iter().map(|t| w(t) * v(t)).sum::<f64>() / m;
    let denominator = batch_j.iter().map(w).sum::<f64>() / m;
    if !numerator.is_finite() || !denominator.is_finite() {
        return Err(EstimatorError::NonFinite);
    }
    Ok(TwoBatch {
        numerator,
        denominator,
        estimate: numerator / denominator,
        m: batch_i.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::Vocabulary;

    fn batch() -> Vec<Trajectory> {
        let v = Vocabulary::new(["a", "b"]).unwrap();
        let a = v.lookup("a").unwrap();
        let b = v.lookup("b").unwrap();
        vec![
            Trajectory::from_tokens(vec![a, a], -1.2).unwrap(),
            Trajectory::from_tokens(vec![a, b], -0.3).unwrap(),
            Trajectory::from_tokens(vec![b, b], -2.0).unwrap(),
        ]
    }

    #[test]
    fn uniform_policy_zero_program_is_sample_mean() {
        let b: Vec<Trajectory> = batch()
            .into_iter()
            .map(|t| Trajectory::from_tokens(t.tokens().to_vec(), 2.0 * 0.5f64.ln()).unwrap())
            .collect();
        let v = |t: &Trajectory| t.tokens()[1].index() as f64 + 1.0;
        let r = snis_expectation(&b, 2, |_| 0.0, v).unwrap();
        assert!((r.estimate - (1.0 + 2.0 + 2.0) / 3.0).abs() < 1e-15);
        let tb = two_batch_estimate(&b, &b, 2, |_| 0.0, v).unwrap();
        assert!((tb.estimate - 5.0 / 3.0).abs() < 1e-15);
        assert!((tb.denominator - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shift_invariance() {
        let b = batch();
        let l = |t: &Trajectory| {
            t.tokens()
                .iter()
                .map(|x| x.index() as f64 * 0.7)
                .sum::<f64>()
        };
        let v = |t: &Trajectory| t.log_pi();
        let base = snis_expectation(&b, 2, l, v).unwrap().estimate;
        for c in [-300.0, -1.0, 5.0, 600.0] {
            let s = snis_expectation(&b, 2, |t| l(t) + c, v).unwrap().estimate;
            assert!((s - base).abs() <= 1e-12, "{c}: {s} vs {base}");
        }
    }

    #[test]
    fn large_rewards_do_not_overflow() {
        let b = batch();
        let r = snis_expectation(&b, 2, |t| 700.0 - t.log_pi(), |_| 1.0).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            snis_expectation(&[], 2, |_| 0.0, |_| 0.0),
            Err(EstimatorError::EmptyBatch)
        ));
        let b = batch();
        assert!(matches!(
            two_batch_estimate(&b, &b[..2], 2, |_| 0.0, |_| 0.0),
            Err(EstimatorError::SizeMismatch(3, 2))
        ));
    }
}
