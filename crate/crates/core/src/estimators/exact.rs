use super::snis::log_sum_exp;
use super::EstimatorError;
use crate::env::{enumerate_trajectories, Env, TabularMdp, DEFAULT_ENUMERATION_CAP};
use crate::trajectory::Trajectory;

/// All trajectories of an MDP with their uniform-prior log-masses
/// `log p(tau) - |tau| log n`, enumerated once and reused across programs.
pub struct ExactOracle {
    trajectories: Vec<Trajectory>,
    log_mass: Vec<f64>,
}

impl ExactOracle {
    pub fn new(mdp: &TabularMdp) -> Result<Self, EstimatorError> {
        Self::with_cap(mdp, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(mdp: &TabularMdp, cap: f64) -> Result<Self, EstimatorError> {
        let list = enumerate_trajectories(mdp, None, cap)?;
        let ln_n = (mdp.n_actions() as f64).ln();
        let (trajectories, log_mass) = list
            .into_iter()
            .map(|(t, p)| {
                let lm = p.ln() - t.len() as f64 * ln_n;
                (t, lm)
            })
            .unzip();
        Ok(Self {
            trajectories,
            log_mass,
        })
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn log_zl(&self, l: impl Fn(&Trajectory) -> f64) -> f64 {
        log_sum_exp(
            self.trajectories
                .iter()
                .zip(&self.log_mass)
                .map(|(t, lm)| lm + l(t)),
        )
    }

    /// `E_{tau ~ p(tau|l)}[v(tau)]`.
    pub fn expectation(
        &self,
        l: impl Fn(&Trajectory) -> f64,
        v: impl Fn(&Trajectory) -> f64,
    ) -> f64 {
        self.expectation_indexed(l, |i| v(&self.trajectories[i]))
    }

    /// Like [`Self::expectation`] with `v` keyed by position in [`Self::trajectories`].
    pub fn expectation_indexed(
        &self,
        l: impl Fn(&Trajectory) -> f64,
        v: impl Fn(usize) -> f64,
    ) -> f64 {
        let lw: Vec<f64> = self
            .trajectories
            .iter()
            .zip(&self.log_mass)
            .map(|(t, lm)| lm + l(t))
            .collect();
        let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, x) in lw.iter().enumerate() {
            let w = (x - max).exp();
            num += w * v(i);
            den += w;
        }
        num / den
    }

    pub fn max_total(&self, l: impl Fn(&Trajectory) -> f64) -> f64 {
        self.trajectories
            .iter()
            .map(l)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `log Z_l` by exhaustive enumeration.
pub fn exact_log_zl(
    mdp: &TabularMdp,
    l: impl Fn(&Trajectory) -> f64,
) -> Result<f64, EstimatorError> {
    Ok(ExactOracle::new(mdp)?.log_zl(l))
}

/// `Z_l = sum_tau p(tau) (1/n)^|tau| exp(l(tau))`.
pub fn exact_zl(mdp: &TabularMdp, l: impl Fn(&Trajectory) -> f64) -> Result<f64, EstimatorError> {
    Ok(exact_log_zl(mdp, l)?.exp())
}

/// `J_v = E_{tau ~ p(tau|l)}[v(tau)]` by exhaustive enumeration.
pub fn exact_expectation(
    mdp: &TabularMdp,
    l: impl Fn(&Trajectory) -> f64,
    v: impl Fn(&Trajectory) -> f64,
) -> Result<f64, EstimatorError> {
    Ok(ExactOracle::new(mdp)?.expectation(l, v))
}

/// `max_tau l(tau)` over trajectories with positive probability.
pub fn max_total_reward(
    mdp: &TabularMdp,
    l: impl Fn(&Trajectory) -> f64,
) -> Result<f64, EstimatorError> {
    Ok(ExactOracle::new(mdp)?.max_total(l))
}
