use std::fmt;
use std::str::FromStr;

use super::LearnerError;
use crate::kv::KvFile;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    Standard,
    Soft,
    Hard,
    Safety,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "standard" => Ok(Mode::Standard),
            "soft" => Ok(Mode::Soft),
            "hard" => Ok(Mode::Hard),
            "safety" => Ok(Mode::Safety),
            _ => Err(format!("unknown mode `{s}` (standard, soft, hard, safety)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Standard => "standard",
            Mode::Soft => "soft",
            Mode::Hard => "hard",
            Mode::Safety => "safety",
        })
    }
}

/// Which quantity stands in for `L_c(q) - alpha` in the Lagrangian.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SafetyForm {
    /// `1 - L_hat_c - alpha`.
    Verbatim,
    /// `L_hat_c - alpha`.
    Direct,
}

impl FromStr for SafetyForm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "verbatim" => Ok(SafetyForm::Verbatim),
            "direct" => Ok(SafetyForm::Direct),
            _ => Err(format!("unknown safety form `{s}` (verbatim, direct)")),
        }
    }
}

impl fmt::Display for SafetyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SafetyForm::Verbatim => "verbatim",
            SafetyForm::Direct => "direct",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SafetyConfig {
    pub d: f64,
    pub kappa: f64,
    pub alpha_conf: f64,
    /// Weight of the per-program constraint-violation score term.
    pub b: f64,
    /// `c_bar`; 0 means "use the environment's bound".
    pub c_bar: f64,
    pub lambda_lr: f64,
    pub form: SafetyForm,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        Self {
            d: 1.0,
            kappa: 0.1,
            alpha_conf: 0.9,
            b: 1.0,
            c_bar: 0.0,
            lambda_lr: 0.01,
            form: SafetyForm::Verbatim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    /// Iterations `N`.
    pub n_iter: usize,
    /// Agent rollouts per iteration.
    pub m: usize,
    /// Program samples per iteration.
    pub k: usize,
    /// Reward-model step size.
    pub alpha: f64,
    /// Sampler step size.
    pub beta: f64,
    /// Constraint weight.
    pub eta: f64,
    pub sigma: f64,
    pub noise_draws: usize,
    pub discount_gamma: f64,
    pub eps_floor: f64,
    pub h_max: f64,
    pub seed: u64,
    pub policy_lr: f64,
    pub value_lr: f64,
    pub entropy_coef: f64,
    pub adv_scale_floor: f64,
    /// Largest Euclidean step of the sampler mean per iteration.
    pub max_mean_step: f64,
    pub log_var_min: f64,
    pub log_var_max: f64,
    /// Stop once this many environment steps were taken (0: no limit).
    pub max_frames: u64,
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Stop after an evaluation reaching this success rate (0: never).
    pub stop_success: f64,
    pub safety: SafetyConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Standard,
            n_iter: 200,
            m: 1,
            k: 16,
            alpha: 0.001,
            beta: 0.0003,
            eta: 1e8,
            sigma: 1.0,
            noise_draws: 1,
            discount_gamma: 0.99,
            eps_floor: 0.01 / 7.0,
            h_max: 10.0,
            seed: 0,
            policy_lr: 1.0,
            value_lr: 0.2,
            entropy_coef: 0.01,
            adv_scale_floor: 0.1,
            max_mean_step: 0.01,
            log_var_min: -10.0,
            log_var_max: 4.0,
            max_frames: 200_000,
            eval_every: 10,
            eval_episodes: 100,
            stop_success: 0.0,
            safety: SafetyConfig::default(),
        }
    }
}

macro_rules! kv_fields {
    ($mac:ident) => {
        $mac! {
            "mode" => mode,
            "N" => n_iter,
            "m" => m,
            "K" => k,
            "alpha" => alpha,
            "beta" => beta,
            "eta" => eta,
            "sigma" => sigma,
            "noise_draws" => noise_draws,
            "discount_gamma" => discount_gamma,
            "eps_floor" => eps_floor,
            "h_max" => h_max,
            "seed" => seed,
            "policy_lr" => policy_lr,
            "value_lr" => value_lr,
            "entropy_coef" => entropy_coef,
            "adv_scale_floor" => adv_scale_floor,
            "max_mean_step" => max_mean_step,
            "log_var_min" => log_var_min,
            "log_var_max" => log_var_max,
            "max_frames" => max_frames,
            "eval_every" => eval_every,
            "eval_episodes" => eval_episodes,
            "stop_success" => stop_success,
            "safety.d" => safety.d,
            "safety.kappa" => safety.kappa,
            "safety.alpha_conf" => safety.alpha_conf,
            "safety.B" => safety.b,
            "safety.c_bar" => safety.c_bar,
            "safety.lambda_lr" => safety.lambda_lr,
            "safety.form" => safety.form,
        }
    };
}

impl TrainConfig {
    /// Reads `key = value` settings on top of the defaults.
    pub fn parse(src: &str) -> Result<Self, LearnerError> {
        let mut kv = KvFile::parse(src)?;
        let mut c = Self::default();
        macro_rules! take {
            ($($key:literal => $($field:ident).+,)*) => {
                $(if let Some(v) = kv.take($key)? {
                    c.$($field).+ = v;
                })*
            };
        }
        kv_fields!(take);
        kv.finish()?;
        c.validate()?;
        Ok(c)
    }

    /// Every setting, in a form [`TrainConfig::parse`] reads back exactly.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        macro_rules! put {
            ($($key:literal => $($field:ident).+,)*) => {
                $(out.push_str(&format!("{} = {}\n", $key, self.$($field).+));)*
            };
        }
        kv_fields!(put);
        out
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |msg: &str| Err(LearnerError::Config(msg.to_string()));
        if self.k < 2 {
            return bad("K must be at least 2 (leave-one-out baseline)");
        }
        if self.m < 1 {
            return bad("m must be at least 1");
        }
        if self.mode == Mode::Safety && self.m < 2 {
            return bad("safety mode splits the rollouts into two batches; m must be at least 2");
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("sigma", self.sigma),
            ("policy_lr", self.policy_lr),
            ("max_mean_step", self.max_mean_step),
            ("h_max", self.h_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(LearnerError::Config(format!(
                    "{name} must be positive and finite"
                )));
            }
        }
        for (name, v) in [
            ("eta", self.eta),
            ("value_lr", self.value_lr),
            ("entropy_coef", self.entropy_coef),
            ("adv_scale_floor", self.adv_scale_floor),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(LearnerError::Config(format!(
                    "{name} must be nonnegative and finite"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.discount_gamma) {
            return bad("discount_gamma must lie in [0, 1]");
        }
        if self.noise_draws == 0 {
            return bad("noise_draws must be positive");
        }
        if !(self.log_var_min < self.log_var_max) {
            return bad("log_var_min must be below log_var_max");
        }
        if !(0.0..=1.0).contains(&self.stop_success) {
            return bad("stop_success must lie in [0, 1]");
        }
        if self.eval_every == 0 {
            return bad("eval_every must be positive");
        }
        if !(self.eps_floor >= 0.0) {
            return bad("eps_floor must be nonnegative");
        }
        let s = &self.safety;
        if self.mode == Mode::Safety {
            if !(s.kappa > 0.0 && s.kappa < s.d) {
                return bad("safety.kappa must lie in (0, safety.d)");
            }
            if !(0.0..=1.0).contains(&s.alpha_conf) {
                return bad("safety.alpha_conf must lie in [0, 1]");
            }
            if !(s.b >= 0.0) || !(s.lambda_lr > 0.0) || !(s.c_bar >= 0.0) {
                return bad(
                    "safety.B and safety.c_bar must be nonnegative, safety.lambda_lr positive",
                );
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let mut c = TrainConfig {
            mode: Mode::Safety,
            m: 4,
            eps_floor: 0.1 / 3.0,
            ..TrainConfig::default()
        };
        c.safety.form = SafetyForm::Direct;
        c.safety.b = 2.5;
        let back = TrainConfig::parse(&c.to_kv()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(TrainConfig::parse("K = 1").is_err());
        assert!(TrainConfig::parse("mode = fancy").is_err());
        assert!(TrainConfig::parse("bogus = 1").is_err());
        assert!(TrainConfig::parse("beta = 0").is_err());
        assert!(TrainConfig::parse("mode = safety\nsafety.kappa = 2\nsafety.d = 1").is_err());
        let c = TrainConfig::parse("N = 3\nK = 4\n# comment\nsafety.B = 7").unwrap();
        assert_eq!((c.n_iter, c.k, c.safety.b), (3, 4, 7.0));
    }
}
