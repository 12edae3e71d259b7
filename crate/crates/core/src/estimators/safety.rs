use super::exact::ExactOracle;
use super::snis::two_batch_estimate;
use super::EstimatorError;
use crate::env::TabularMdp;
use crate::trajectory::Trajectory;

/// Safety requirement `E_{p(tau|l)}[c(tau)] <= d`, with slack `kappa` for the
/// empirical test and a cap `c_bar >= max_tau c(tau)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SafetySpec {
    pub d: f64,
    pub kappa: f64,
    pub c_bar: f64,
    pub alpha_conf: f64,
}

impl SafetySpec {
    pub fn new(d: f64, kappa: f64, c_bar: f64, alpha_conf: f64) -> Result<Self, EstimatorError> {
        let s = Self {
            d,
            kappa,
            c_bar,
            alpha_conf,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if !(self.kappa > 0.0 && self.kappa < self.d) {
            return Err(EstimatorError::InvalidArgument(format!(
                "kappa {} must lie in (0, d = {})",
                self.kappa, self.d
            )));
        }
        if !(self.c_bar >= 0.0) || !self.c_bar.is_finite() {
            return Err(EstimatorError::InvalidArgument(format!(
                "cost cap {} must be finite and nonnegative",
                self.c_bar
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha_conf) {
            return Err(EstimatorError::InvalidArgument(format!(
                "alpha {} must lie in [0, 1]",
                self.alpha_conf
            )));
        }
        Ok(())
    }

    /// Errors when `c_bar` is below the largest cost the MDP can produce.
    pub fn check_cost_cap(&self, mdp: &TabularMdp) -> Result<(), EstimatorError> {
        let max = mdp.max_cost()?;
        if self.c_bar < max {
            return Err(EstimatorError::InvalidArgument(format!(
                "cost cap {} is below the maximum trajectory cost {max}",
                self.c_bar
            )));
        }
        Ok(())
    }

    /// Empirical test: a ratio at or above `d - kappa` counts as unsafe.
    pub fn flags_unsafe(&self, ratio: f64) -> bool {
        ratio >= self.d - self.kappa
    }
}

fn check_distribution(q: &[f64], n: usize) -> Result<(), EstimatorError> {
    if q.len() != n {
        return Err(EstimatorError::SizeMismatch(q.len(), n));
    }
    if q.iter().any(|x| !(*x >= 0.0)) {
        return Err(EstimatorError::InvalidArgument(
            "program weights must be nonnegative".into(),
        ));
    }
    let s: f64 = q.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(EstimatorError::Unnormalized(s));
    }
    Ok(())
}

/// `L_c(q) = sum_k q_k 1{E_{p(tau|l_k)}[c(tau)] <= d}` by enumeration.
pub fn exact_safety_lc(
    mdp: &TabularMdp,
    programs: &[&dyn Fn(&Trajectory) -> f64],
    q: &[f64],
    spec: &SafetySpec,
) -> Result<f64, EstimatorError> {
    check_distribution(q, programs.len())?;
    spec.validate()?;
    let oracle = ExactOracle::new(mdp)?;
    let costs = oracle
        .trajectories()
        .iter()
        .map(|t| mdp.cost(t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut lc = 0.0;
    for (l, qk) in programs.iter().zip(q) {
        let jc = exact_cost_with(&oracle, &costs, l);
        if jc <= spec.d {
            lc += qk;
        }
    }
    Ok(lc)
}

/// `E_{p(tau|l)}[c(tau)]` for each program, by enumeration.
pub fn exact_costs(
    mdp: &TabularMdp,
    programs: &[&dyn Fn(&Trajectory) -> f64],
) -> Result<Vec<f64>, EstimatorError> {
    let oracle = ExactOracle::new(mdp)?;
    let costs = oracle
        .trajectories()
        .iter()
        .map(|t| mdp.cost(t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(programs
        .iter()
        .map(|l| exact_cost_with(&oracle, &costs, l))
        .collect())
}

fn exact_cost_with(oracle: &ExactOracle, costs: &[f64], l: &dyn Fn(&Trajectory) -> f64) -> f64 {
    oracle.expectation_indexed(l, |i| costs[i])
}

/// Two-batch cost ratio `(sum_i w_i c(tau_i)) / (sum_j w_j)` for one program.
pub fn cost_ratio(
    batch_i: &[Trajectory],
    batch_j: &[Trajectory],
    n_actions: usize,
    l: impl Fn(&Trajectory) -> f64,
    cost: impl Fn(&Trajectory) -> f64,
) -> Result<f64, EstimatorError> {
    Ok(two_batch_estimate(batch_i, batch_j, n_actions, l, cost)?.estimate)
}

/// `L_hat_c(q) = sum_k q_k 1{ratio_k >= d - kappa}`. For programs sampled
/// from `q` pass uniform weights `1/K`.
pub fn empirical_safety_lhat(
    ratios: &[f64],
    q: &[f64],
    spec: &SafetySpec,
) -> Result<f64, EstimatorError> {
    spec.validate()?;
    if ratios.is_empty() {
        return Err(EstimatorError::EmptyBatch);
    }
    check_distribution(q, ratios.len())?;
    if ratios.iter().any(|r| r.is_nan()) {
        return Err(EstimatorError::NonFinite);
    }
    Ok(ratios
        .iter()
        .zip(q)
        .filter(|(r, _)| spec.flags_unsafe(**r))
        .map(|(_, qk)| qk)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(SafetySpec::new(1.0, 0.0, 3.0, 0.5).is_err());
        assert!(SafetySpec::new(1.0, 1.0, 3.0, 0.5).is_err());
        assert!(SafetySpec::new(1.0, 0.5, -1.0, 0.5).is_err());
        assert!(SafetySpec::new(1.0, 0.5, 3.0, 1.5).is_err());
        let s = SafetySpec::new(1.0, 0.5, 3.0, 0.5).unwrap();
        assert!(s.flags_unsafe(0.5));
        assert!(!s.flags_unsafe(0.4999));
        let mdp = TabularMdp::toy_three_state();
        assert!(s.check_cost_cap(&mdp).is_err());
        assert!(SafetySpec::new(1.0, 0.5, 6.0, 0.5)
            .unwrap()
            .check_cost_cap(&mdp)
            .is_ok());
    }

    #[test]
    fn lc_trivial_cases() {
        let mdp = TabularMdp::toy_three_state();
        let zero = |_: &Trajectory| 0.0;
        let lax = SafetySpec::new(100.0, 1.0, 6.0, 0.5).unwrap();
        assert_eq!(
            exact_safety_lc(&mdp, &[&zero, &zero], &[0.3, 0.7], &lax).unwrap(),
            1.0
        );
        let tight = SafetySpec::new(0.01, 0.005, 6.0, 0.5).unwrap();
        assert_eq!(
            exact_safety_lc(&mdp, &[&zero], &[1.0], &tight).unwrap(),
            0.0
        );
        assert!(matches!(
            exact_safety_lc(&mdp, &[&zero], &[0.9], &lax),
            Err(EstimatorError::Unnormalized(_))
        ));
    }

    #[test]
    fn exact_costs_match_direct_sum() {
        let mdp = TabularMdp::toy_three_state();
        let l = |t: &Trajectory| t.steps().iter().map(|s| 0.3 * s.action as f64).sum::<f64>();
        let got = exact_costs(&mdp, &[&l]).unwrap()[0];
        let o = ExactOracle::new(&mdp).unwrap();
        let want = o.expectation(l, |t| mdp.cost(t).unwrap());
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn lhat_threshold() {
        let s = SafetySpec::new(1.0, 0.25, 3.0, 0.5).unwrap();
        assert_eq!(
            empirical_safety_lhat(&[0.0, 0.0], &[0.5, 0.5], &s).unwrap(),
            0.0
        );
        assert_eq!(
            empirical_safety_lhat(&[0.75, 0.2, 2.0], &[0.2, 0.3, 0.5], &s).unwrap(),
            0.7
        );
    }
}
