use super::EstimatorError;

/// Lower bound on `pi_A(tau) * n^|tau|` for trajectories of length `len`
/// when every action has probability at least `min_prob`.
pub fn relative_policy_floor(min_prob: f64, n_actions: usize, len: usize) -> f64 {
    (n_actions as f64 * min_prob).powi(len as i32)
}

/// Interval for the two-batch estimate around the true value, with the
/// confidence that the estimate lands inside it.
#[derive(Clone, Debug, PartialEq)]
pub struct Theorem1 {
    pub lo: f64,
    pub hi: f64,
    pub confidence: f64,
}

impl Theorem1 {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// `[(Z J - gamma) / (Z + gamma / v_bar), (Z J + gamma) / (Z - gamma / v_bar)]`
/// with confidence
/// `(1 - exp(-2 m gamma^2 pi_floor^2 / v_bar^2 / exp(2 l_max)))^4`.
///
/// `z` and `j` are the true partition function and expectation, `pi_floor`
/// is relative to the uniform action prior (see [`relative_policy_floor`])
/// and `l_max >= max_tau l(tau)`. The upper end is `+inf` when
/// `z <= gamma / v_bar`. The underlying Hoeffding steps take the weighted
/// integrand to range over `[0, max]`, so `v` should be nonnegative.
pub fn theorem1_interval(
    m: usize,
    gamma: f64,
    v_bar: f64,
    pi_floor: f64,
    l_max: f64,
    z: f64,
    j: f64,
) -> Result<Theorem1, EstimatorError> {
    if !(gamma > 0.0) {
        return Err(EstimatorError::NonPositiveGamma(gamma));
    }
    if !(v_bar > 0.0) || !(pi_floor > 0.0) || !(z > 0.0) {
        return Err(EstimatorError::InvalidArgument(
            "v_bar, pi_floor and z must be positive".into(),
        ));
    }
    let lo = (z * j - gamma) / (z + gamma / v_bar);
    let den = z - gamma / v_bar;
    let hi = if den > 0.0 {
        (z * j + gamma) / den
    } else {
        f64::INFINITY
    };
    // exponent in log space: log(2 m gamma^2 pi^2 / v^2) - 2 l_max
    let log_rate = (2.0 * m as f64).ln() + 2.0 * (gamma * pi_floor / v_bar).ln() - 2.0 * l_max;
    let tail = (-log_rate.exp()).exp();
    let confidence = (1.0 - tail).powi(4).clamp(0.0, 1.0);
    Ok(Theorem1 { lo, hi, confidence })
}

/// `exp(-2 (delta + delta_hat)^2)` with
/// `delta_hat = (1 - L_c)(1 - (1 - exp(-2 m kappa^2 pi^2 / (c_bar + d - kappa)^2))^2)`,
/// clamped to `[0, 1]`.
pub fn proposition1_bound(
    m: usize,
    kappa: f64,
    d: f64,
    c_bar: f64,
    pi_floor: f64,
    l_c: f64,
    delta: f64,
) -> Result<f64, EstimatorError> {
    if !(delta >= 0.0) {
        return Err(EstimatorError::InvalidArgument(
            "delta must be nonnegative".into(),
        ));
    }
    if !(kappa > 0.0 && kappa < d) {
        return Err(EstimatorError::InvalidArgument(
            "kappa must lie in (0, d)".into(),
        ));
    }
    if !(0.0..=1.0).contains(&l_c) {
        return Err(EstimatorError::InvalidArgument(
            "L_c must lie in [0, 1]".into(),
        ));
    }
    if !(c_bar >= 0.0) || !(pi_floor > 0.0) {
        return Err(EstimatorError::InvalidArgument(
            "c_bar must be nonnegative and pi_floor positive".into(),
        ));
    }
    let rate = 2.0 * m as f64 * (kappa * pi_floor / (c_bar + d - kappa)).powi(2);
    let inner = 1.0 - (-rate).exp();
    let delta_hat = (1.0 - l_c) * (1.0 - inner * inner);
    Ok((-2.0 * (delta + delta_hat).powi(2)).exp().clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem1_limits() {
        let t = theorem1_interval(0, 0.1, 1.0, 0.5, 0.0, 1.0, 0.5).unwrap();
        assert_eq!(t.confidence, 0.0);
        let t = theorem1_interval(100_000_000, 0.1, 1.0, 0.5, 0.0, 1.0, 0.5).unwrap();
        assert!((t.confidence - 1.0).abs() < 1e-12);
        assert!(t.lo <= 0.5 && 0.5 <= t.hi);
        let t = theorem1_interval(10, 2.0, 1.0, 0.5, 0.0, 1.0, 0.5).unwrap();
        assert_eq!(t.hi, f64::INFINITY);
        assert!(theorem1_interval(10, 0.0, 1.0, 0.5, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn proposition1_plug_in() {
        let b = proposition1_bound(0, 0.5, 1.0, 3.0, 0.2, 0.3, 0.0).unwrap();
        assert!((b - (-2.0 * 0.7f64.powi(2)).exp()).abs() < 1e-15);
        let b = proposition1_bound(50, 0.5, 1.0, 3.0, 0.2, 1.0, 0.4).unwrap();
        assert!((b - (-2.0 * 0.16f64).exp()).abs() < 1e-15);
        assert!(proposition1_bound(5, 1.5, 1.0, 3.0, 0.2, 0.5, 0.0).is_err());
        assert!(proposition1_bound(5, 0.5, 1.0, 3.0, 0.2, 0.5, -0.1).is_err());
    }
}
