//! Replication sweeps of the estimators on an enumerable MDP, checked
//! against exact enumeration. The trajectory cost `c(tau)` doubles as the
//! bounded, nonnegative value `v` for the SNIS and interval studies.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::env::{rollout, Env, TabularMdp};
use crate::estimators::{
    cost_ratio, empirical_safety_lhat, proposition1_bound, relative_policy_floor, snis_expectation,
    theorem1_interval, two_batch_estimate, EstimateReport, EstimatorError, ExactOracle, ReportRow,
    SafetySpec,
};
use crate::kv::{KvError, KvFile};
use crate::learner::stream_seed;
use crate::policy::PolicyTable;
use crate::trajectory::Trajectory;

const POLICY_STREAM: u64 = 11;
const BATCH_STREAM: u64 = 12;

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Policy(#[from] crate::policy::PolicyError),
    #[error(transparent)]
    Mdp(#[from] crate::env::MdpError),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum StudyKind {
    Snis,
    Theorem1,
    Safety,
}

impl FromStr for StudyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "snis" => Ok(Self::Snis),
            "theorem1" => Ok(Self::Theorem1),
            "safety" => Ok(Self::Safety),
            _ => Err(format!(
                "unknown study `{s}` (expected snis, theorem1 or safety)"
            )),
        }
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Snis => "snis",
            Self::Theorem1 => "theorem1",
            Self::Safety => "safety",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    /// Batch sizes to sweep.
    pub ms: Vec<usize>,
    /// Replications per batch size.
    pub reps: usize,
    pub seed: u64,
    /// Hole values for the sketch giving `l`.
    pub holes: Vec<f64>,
    /// Behaviour policy logits are drawn from `N(0, policy_spread^2)`.
    pub policy_spread: f64,
    pub eps_floor: f64,
    /// Hoeffding slack for the interval study.
    pub gamma: f64,
    /// Slack of the safety tail event.
    pub delta: f64,
    pub d: f64,
    pub kappa: f64,
    /// Cost cap; `None` means the largest trajectory cost of the MDP.
    pub c_bar: Option<f64>,
    /// Program family `l_k = scale_k * l` for the safety study.
    pub scales: Vec<f64>,
    /// Probabilities of the programs in `scales`.
    pub q: Vec<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            ms: vec![100, 1000, 10_000],
            reps: 100,
            seed: 0,
            holes: Vec::new(),
            policy_spread: 0.5,
            eps_floor: 0.0,
            gamma: 1.0,
            delta: 0.05,
            d: 3.0,
            kappa: 0.5,
            c_bar: None,
            scales: vec![0.0, 0.5, 1.0],
            q: vec![0.2, 0.3, 0.5],
        }
    }
}

fn list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| format!("`{x}`: {e}")))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl StudyConfig {
    /// Reads `key = value` settings on top of the defaults. Lists are comma
    /// separated.
    pub fn parse(src: &str) -> Result<Self, StudyError> {
        let mut kv = KvFile::parse(src)?;
        let mut c = Self::default();
        if let Some(v) = kv.take_with("ms", list)? {
            c.ms = v;
        }
        if let Some(v) = kv.take("reps")? {
            c.reps = v;
        }
        if let Some(v) = kv.take("seed")? {
            c.seed = v;
        }
        if let Some(v) = kv.take_with("holes", list)? {
            c.holes = v;
        }
        if let Some(v) = kv.take("policy_spread")? {
            c.policy_spread = v;
        }
        if let Some(v) = kv.take("eps_floor")? {
            c.eps_floor = v;
        }
        if let Some(v) = kv.take("gamma")? {
            c.gamma = v;
        }
        if let Some(v) = kv.take("delta")? {
            c.delta = v;
        }
        if let Some(v) = kv.take("safety.d")? {
            c.d = v;
        }
        if let Some(v) = kv.take("safety.kappa")? {
            c.kappa = v;
        }
        if let Some(v) = kv.take("safety.c_bar")? {
            c.c_bar = Some(v);
        }
        if let Some(v) = kv.take_with("safety.scales", list)? {
            c.scales = v;
        }
        if let Some(v) = kv.take_with("safety.q", list)? {
            c.q = v;
        }
        kv.finish()?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_kv(&self) -> String {
        let mut out = format!(
            "ms = {}\nreps = {}\nseed = {}\nholes = {}\npolicy_spread = {}\neps_floor = {}\ngamma = {}\ndelta = {}\n",
            join(&self.ms),
            self.reps,
            self.seed,
            join(&self.holes),
            self.policy_spread,
            self.eps_floor,
            self.gamma,
            self.delta
        );
        out.push_str(&format!(
            "safety.d = {}\nsafety.kappa = {}\n",
            self.d, self.kappa
        ));
        if let Some(c) = self.c_bar {
            out.push_str(&format!("safety.c_bar = {c}\n"));
        }
        out.push_str(&format!(
            "safety.scales = {}\nsafety.q = {}\n",
            join(&self.scales),
            join(&self.q)
        ));
        out
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |m: &str| Err(StudyError::Config(m.to_string()));
        if self.ms.is_empty() || self.ms.contains(&0) {
            return bad("ms must list positive batch sizes");
        }
        if self.reps == 0 {
            return bad("reps must be positive");
        }
        if !(self.policy_spread >= 0.0) || !self.policy_spread.is_finite() {
            return bad("policy_spread must be nonnegative");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if !(self.delta >= 0.0) {
            return bad("delta must be nonnegative");
        }
        if self.scales.is_empty() || self.scales.len() != self.q.len() {
            return bad("safety.scales and safety.q must be nonempty and of equal length");
        }
        Ok(())
    }
}

/// Per-batch-size aggregate of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct StudySummary {
    pub m: usize,
    pub median_abs_err: f64,
    /// Interval study: fraction of replications inside the interval.
    /// Safety study: frequency of `L_c <= 1 - L_hat + delta`.
    pub frequency: Option<f64>,
    /// The matching guarantee: the interval confidence or the tail bound.
    pub bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub rows: Vec<ReportRow>,
    pub summary: Vec<StudySummary>,
}

/// The behaviour policy of a study: seeded Gaussian logits.
pub fn behaviour_policy(mdp: &TabularMdp, cfg: &StudyConfig) -> Result<PolicyTable, StudyError> {
    let (s, a) = (mdp.n_states(), mdp.n_actions());
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, POLICY_STREAM, 0));
    let normal =
        Normal::new(0.0, cfg.policy_spread).map_err(|e| StudyError::Config(e.to_string()))?;
    let logits = (0..s * a).map(|_| normal.sample(&mut rng)).collect();
    Ok(PolicyTable::from_logits(s, a, logits, cfg.eps_floor)?)
}

fn batch(policy: &PolicyTable, mdp: &TabularMdp, m: usize, seed: u64) -> Vec<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| rollout(policy, mdp, &mut rng)).collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Runs the sweep. `l` is the program total `l(tau)`; replications run in
/// parallel and come back in a fixed order.
pub fn run_study(
    kind: StudyKind,
    mdp: &TabularMdp,
    l: &(dyn Fn(&Trajectory) -> f64 + Sync),
    cfg: &StudyConfig,
) -> Result<StudyResult, StudyError> {
    cfg.validate()?;
    let oracle = ExactOracle::new(mdp)?;
    let cost = |t: &Trajectory| mdp.cost(t).expect("cost table checked");
    let v_bar = mdp.max_cost()?;
    if !(v_bar > 0.0) {
        return Err(StudyError::Config(
            "studies need a cost table with a positive entry".into(),
        ));
    }
    let policy = behaviour_policy(mdp, cfg)?;
    let n = mdp.n_actions();
    let pi_floor = relative_policy_floor(policy.min_prob(), n, mdp.horizon());
    let z = oracle.log_zl(l).exp();
    let j = oracle.expectation(l, cost);
    let l_max = oracle.max_total(l);

    // safety set-up
    type Scaled<'a> = Box<dyn Fn(&Trajectory) -> f64 + Sync + 'a>;
    let scaled: Vec<Scaled<'_>> = cfg
        .scales
        .iter()
        .map(|&s| {
            Box::new(move |t: &Trajectory| s * l(t)) as Box<dyn Fn(&Trajectory) -> f64 + Sync>
        })
        .collect();
    let safety = if kind == StudyKind::Safety {
        let c_bar = cfg.c_bar.unwrap_or(v_bar);
        let spec = SafetySpec::new(cfg.d, cfg.kappa, c_bar, 0.5)?;
        spec.check_cost_cap(mdp)?;
        let programs: Vec<&dyn Fn(&Trajectory) -> f64> = scaled
            .iter()
            .map(|b| b.as_ref() as &dyn Fn(&Trajectory) -> f64)
            .collect();
        let lc = crate::estimators::exact_safety_lc(mdp, &programs, &cfg.q, &spec)?;
        Some((spec, lc))
    } else {
        None
    };

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (mi, &m) in cfg.ms.iter().enumerate() {
        let block: Vec<(ReportRow, Option<bool>)> = (0..cfg.reps)
            .into_par_iter()
            .map(|r| -> Result<_, StudyError> {
                let seed = stream_seed(cfg.seed, BATCH_STREAM, (mi as u64) << 32 | r as u64);
                match kind {
                    StudyKind::Snis => {
                        let b = batch(&policy, mdp, m, seed);
                        let rep = snis_expectation(&b, n, l, cost)?.with_exact(j);
                        Ok((rep.row("snis", seed), None))
                    }
                    StudyKind::Theorem1 => {
                        let bi = batch(&policy, mdp, m, seed);
                        let bj = batch(&policy, mdp, m, seed ^ 0x5A5A_5A5A_5A5A_5A5A);
                        let tb = two_batch_estimate(&bi, &bj, n, l, cost)?;
                        let iv = theorem1_interval(m, cfg.gamma, v_bar, pi_floor, l_max, z, j)?;
                        let inside = iv.contains(tb.estimate);
                        let rep = EstimateReport::new(tb.estimate, m)
                            .with_exact(j)
                            .with_interval(iv.lo, iv.hi, iv.confidence);
                        Ok((rep.row("theorem1", seed), Some(inside)))
                    }
                    StudyKind::Safety => {
                        let (spec, lc) = safety.as_ref().expect("set up above");
                        let bi = batch(&policy, mdp, m, seed);
                        let bj = batch(&policy, mdp, m, seed ^ 0x5A5A_5A5A_5A5A_5A5A);
                        let ratios = scaled
                            .iter()
                            .map(|lk| cost_ratio(&bi, &bj, n, lk.as_ref(), cost))
                            .collect::<Result<Vec<_>, _>>()?;
                        let lhat = empirical_safety_lhat(&ratios, &cfg.q, spec)?;
                        let hit = *lc <= 1.0 - lhat + cfg.delta;
                        let bound = proposition1_bound(
                            m, spec.kappa, spec.d, spec.c_bar, pi_floor, *lc, cfg.delta,
                        )?;
                        // reported as the estimated safe mass, comparable to L_c
                        let mut rep = EstimateReport::new(1.0 - lhat, m).with_exact(*lc);
                        rep.confidence = Some(bound);
                        Ok((rep.row("safety", seed), Some(hit)))
                    }
                }
            })
            .collect::<Result<_, _>>()?;
        let errs: Vec<f64> = block.iter().filter_map(|(r, _)| r.abs_err).collect();
        let hits: Vec<bool> = block.iter().filter_map(|(_, h)| *h).collect();
        let frequency = (!hits.is_empty())
            .then(|| hits.iter().filter(|h| **h).count() as f64 / hits.len() as f64);
        let bound = block.first().and_then(|(r, _)| r.confidence);
        summary.push(StudySummary {
            m,
            median_abs_err: median(errs),
            frequency,
            bound,
        });
        rows.extend(block.into_iter().map(|(r, _)| r));
    }
    Ok(StudyResult { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let c = StudyConfig {
            c_bar: Some(6.0),
            holes: vec![0.5, -1.0],
            ..StudyConfig::default()
        };
        assert_eq!(StudyConfig::parse(&c.to_kv()).unwrap(), c);
        assert!(StudyConfig::parse("ms = 10,0").is_err());
        assert!(StudyConfig::parse("safety.q = 1").is_err());
    }

    #[test]
    fn small_sweeps_run() {
        let mdp = TabularMdp::toy_three_state();
        let cfg = StudyConfig {
            ms: vec![20, 200],
            reps: 8,
            ..StudyConfig::default()
        };
        let l = |t: &Trajectory| 0.1 * t.steps()[0].action as f64;
        for kind in [StudyKind::Snis, StudyKind::Theorem1, StudyKind::Safety] {
            let out = run_study(kind, &mdp, &l, &cfg).unwrap();
            assert_eq!(out.rows.len(), 16);
            assert_eq!(out.summary.len(), 2);
            assert!(out.rows.iter().all(|r| r.estimator == kind.to_string()));
        }
    }
}
